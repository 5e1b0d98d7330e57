#pragma once

#include <map>
#include <string>
#include <vector>

#include "promptloom/cluster_index.hpp"
#include "promptloom/config.hpp"
#include "promptloom/corpus.hpp"
#include "promptloom/editor.hpp"
#include "promptloom/embed.hpp"

namespace promptloom {

struct EditDiagnostics {
  double r_div_before = 0.0;  // prompt divergence with revised = user
  double r_div_after = 0.0;   // prompt divergence with revised = edited text
  std::vector<std::string> exemplar_ids;
  bool dry_run = false;
  std::map<std::string, double> timings_ms;  // per stage; volatile, not persisted
};

struct EditOutcome {
  EditedPrompt edited;
  InContextPrompt prompt;
  EditDiagnostics diagnostics;
};

// End-to-end edit path: embed the user text (reusing the table entry when
// the text matches a known user prompt), retrieve the candidate pool, select
// exemplars, assemble the in-context prompt and obtain the edited prompt.
// dry_run (or a missing llm endpoint, which downgrades to dry run and flags
// it) returns the rendered prompt as the edited text. Stage failures carry
// the stage name. Passing a transport overrides the default HTTP client.
EditOutcome run_pipeline(const Corpus& corpus, const EmbeddingTable& table,
                         const ClusterIndex& index, const PipelineConfig& config,
                         const std::string& user_text, bool dry_run,
                         LlmTransport* transport = nullptr);

// Deterministic JSON rendering of the outcome (timings excluded so repeat
// runs are byte-identical); timings_to_json carries the volatile part.
std::string outcome_to_json(const EditOutcome& outcome);
std::string timings_to_json(const EditDiagnostics& diagnostics);

}  // namespace promptloom
