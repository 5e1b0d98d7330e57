#include "promptloom/pipeline.hpp"

#include <chrono>
#include <type_traits>

#include "json.hpp"
#include "promptloom/error.hpp"
#include "promptloom/features.hpp"
#include "promptloom/hashing.hpp"

namespace promptloom {

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}

  template <typename Fn>
  auto run(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, start);
      } else {
        auto result = fn();
        record(stage, start);
        return result;
      }
    } catch (const Error& e) {
      raise(e.kind(), "[" + stage + "] " + e.what());
    }
  }

 private:
  void record(const std::string& stage,
              std::chrono::steady_clock::time_point start) {
    sink_[stage] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  }

  std::map<std::string, double>& sink_;
};

}  // namespace

EditOutcome run_pipeline(const Corpus& corpus, const EmbeddingTable& table,
                         const ClusterIndex& index, const PipelineConfig& config,
                         const std::string& user_text, bool dry_run,
                         LlmTransport* transport) {
  if (user_text.empty()) raise(ErrorKind::Invalid, "user prompt text must be non-empty");

  EditOutcome outcome;
  StageTimer timer(outcome.diagnostics.timings_ms);

  Prompt user;
  user.id = "user";
  user.text = user_text;
  user.source = Source::User;

  // Reuse the stored embedding when this text is a known user prompt and the
  // table covers it; otherwise fall back to the hash embedder.
  const EmbeddingVector query = timer.run("embed", [&] {
    for (const Prompt& p : corpus.prompts()) {
      if (p.source == Source::User && p.text == user_text) {
        if (const auto row = table.find(p.id)) {
          return EmbeddingVector(table.vec(*row).begin(), table.vec(*row).end());
        }
      }
    }
    return hash_embed(user_text, table.dim(), stage_seed(config.seed, "embed"));
  });

  const RetrievalResult candidates = timer.run("retrieve", [&] {
    const std::size_t nprobe = std::min(config.index.nprobe, index.k());
    return retrieve_topM(query, index, table, config.editor.pool_size, nprobe);
  });

  const ExemplarSet exemplars = timer.run("select", [&] {
    const std::size_t k = std::min(config.editor.k_exemplars, candidates.size());
    return select_exemplars(candidates, corpus, strategy_from_name(config.editor.strategy),
                            k, stage_seed(config.seed, "editor"));
  });

  outcome.prompt = timer.run("assemble", [&] {
    return assemble_prompt(config.editor.instruction, exemplars, user);
  });

  bool effective_dry_run = dry_run;
  if (!dry_run && config.llm.endpoint.empty() && transport == nullptr) {
    effective_dry_run = true;  // no endpoint configured; downgrade and flag
  }
  outcome.diagnostics.dry_run = effective_dry_run;

  if (effective_dry_run) {
    outcome.edited.original_id = user.id;
    outcome.edited.edited_text = outcome.prompt.rendered;
    outcome.edited.model_name = "dry-run";
    outcome.diagnostics.timings_ms["edit"] = 0.0;
  } else {
    outcome.edited = timer.run("edit", [&] {
      LlmClientConfig client;
      client.endpoint = config.llm.endpoint;
      client.model = config.llm.model;
      client.api_key = config.llm.api_key;
      client.timeout_ms = config.llm.timeout_ms;
      client.max_retries = config.llm.max_retries;
      client.backoff_ms = config.llm.backoff_ms;
      client.max_tokens = config.llm.max_tokens;
      HttpTransport http;
      LlmTransport& effective = transport ? *transport : static_cast<LlmTransport&>(http);
      return edit_prompt(outcome.prompt, client, effective);
    });
  }

  timer.run("features", [&] {
    FeaturizeConfig fc;
    fc.n_orders = config.features.n_orders;
    fc.feature_dim = config.features.feature_dim;
    fc.alpha = config.features.alpha;
    fc.seed = stage_seed(config.seed, "features");

    const std::vector<std::string> train_texts = corpus.texts(Source::Train);
    const std::vector<FeatureDistribution> train_set =
        bootstrap_feature_set(train_texts, config.features.bootstrap_count, fc,
                              stage_seed(config.seed, "bootstrap"));
    const FeatureDistribution user_dist =
        featurize(std::span<const std::string>(&user.text, 1), fc);
    const FeatureDistribution revised =
        featurize(std::span<const std::string>(&outcome.edited.edited_text, 1), fc);

    outcome.diagnostics.r_div_before = prompt_divergence({train_set, user_dist, user_dist});
    outcome.diagnostics.r_div_after = prompt_divergence({train_set, user_dist, revised});
  });

  for (const Exemplar& e : exemplars.exemplars) {
    outcome.diagnostics.exemplar_ids.push_back(e.id);
  }
  return outcome;
}

std::string outcome_to_json(const EditOutcome& outcome) {
  nlohmann::json out;
  out["dry_run"] = outcome.diagnostics.dry_run;
  out["edited_text"] = outcome.edited.edited_text;
  out["exemplar_ids"] = outcome.diagnostics.exemplar_ids;
  out["instruction"] = outcome.prompt.instruction;
  out["model"] = outcome.edited.model_name;
  out["r_div_after"] = outcome.diagnostics.r_div_after;
  out["r_div_before"] = outcome.diagnostics.r_div_before;
  out["rendered_prompt"] = outcome.prompt.rendered;
  out["retries"] = outcome.edited.retries;
  out["strategy"] = strategy_name(outcome.prompt.exemplars.strategy);
  out["user_text"] = outcome.prompt.user_prompt.text;
  return out.dump(2);
}

std::string timings_to_json(const EditDiagnostics& diagnostics) {
  nlohmann::json out;
  for (const auto& [stage, ms] : diagnostics.timings_ms) out[stage] = ms;
  return out.dump();
}

}  // namespace promptloom
