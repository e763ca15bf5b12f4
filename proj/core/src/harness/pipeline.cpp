#include "genex/harness/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/common/numeric.hpp"
#include "genex/common/parallel.hpp"
#include "genex/common/rng.hpp"
#include "genex/common/utf8.hpp"
#include "genex/corpus/corpus.hpp"
#include "genex/corpus/markers.hpp"
#include "genex/corpus/text.hpp"
#include "genex/harness/report.hpp"
#include "genex/metrics/anomaly.hpp"
#include "genex/metrics/consistency.hpp"
#include "genex/metrics/exaggeration.hpp"
#include "genex/metrics/lexical.hpp"
#include "genex/persona/prompt.hpp"
#include "json.hpp"

#ifndef GENEX_VERSION
#define GENEX_VERSION "unknown"
#endif

namespace genex::harness {

namespace fs = std::filesystem;
using corpus::RawTweet;
using persona::Strategy;
using stance::Leaning;
using nlohmann::json;

namespace {

constexpr Stage kStages[] = {Stage::Ingest,   Stage::Eligibility, Stage::Leaning, Stage::Simulate,
                             Stage::Classify, Stage::Toxicity,    Stage::Metrics, Stage::Report};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string class_name(Leaning c) { return std::string(stance::to_string(c)); }

struct UserCtx {
  const corpus::UserHistory* history = nullptr;
  stance::LeaningProfile profile;
};

// A human reply by an eligible user to a resolvable parent.
struct Candidate {
  std::size_t user = 0;
  const RawTweet* reply = nullptr;
  const RawTweet* parent = nullptr;
  std::optional<Leaning> label;
  std::optional<double> toxicity;
};

struct WorkItem {
  std::size_t model = 0;
  Strategy strategy = Strategy::ZeroShot;
  std::size_t candidate = 0;
  persona::RenderedPrompt prompt;
  std::vector<std::string> references;  // few-shot sample texts
  persona::GenerationRecord record;
  std::optional<Leaning> label;
  std::optional<double> toxicity;
};

class Run {
 public:
  Run(const RunConfig& config, const PipelineOptions& options) : cfg_(config), opt_(options) {}

  RunManifest execute();

 private:
  void stage_ingest();
  void stage_eligibility();
  void stage_leaning();
  void stage_simulate();
  void stage_classify();
  void stage_toxicity();
  void stage_metrics();
  void stage_report();
  void write_manifest();

  void run_stage(Stage s);
  void count(const std::string& key, std::int64_t v) { manifest_.counts[key] = v; }

  std::vector<const WorkItem*> items_for(std::size_t model, Strategy s) const;

  // Tables.
  void table_leaning_profiles();
  void table_diversity(const corpus::Tokenizer& tokenizer);
  void table_transitions();
  void table_consistency();
  void table_toxicity();
  void table_exaggeration();
  void table_anomalies(const corpus::Tokenizer& tokenizer);

  const RunConfig& cfg_;
  const PipelineOptions& opt_;
  RunManifest manifest_;
  json inputs_ = json::object();

  std::unique_ptr<stance::StanceBackend> owned_stance_;
  const stance::StanceBackend* stance_ = nullptr;
  std::unique_ptr<toxscore::ToxicityScorer> owned_scorer_;
  const toxscore::ToxicityScorer* scorer_ = nullptr;
  std::optional<persona::PromptTemplates> templates_;
  std::optional<corpus::EntityLexicon> entities_;
  std::optional<corpus::StopWordList> stop_words_;

  corpus::Corpus corpus_;
  std::vector<corpus::UserHistory> histories_;
  std::vector<UserCtx> users_;
  std::vector<Candidate> candidates_;
  std::vector<WorkItem> items_;
  std::map<std::string, double> tox_cache_;
  std::vector<Table> tables_;
  std::size_t few_shot_ranked_ = 0;
};

void Run::run_stage(Stage s) {
  StageRecord rec;
  rec.name = std::string(to_string(s));
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    manifest_.stages.push_back(rec);
  };
  try {
    switch (s) {
      case Stage::Ingest: stage_ingest(); break;
      case Stage::Eligibility: stage_eligibility(); break;
      case Stage::Leaning: stage_leaning(); break;
      case Stage::Simulate: stage_simulate(); break;
      case Stage::Classify: stage_classify(); break;
      case Stage::Toxicity: stage_toxicity(); break;
      case Stage::Metrics: stage_metrics(); break;
      case Stage::Report: stage_report(); break;
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
    finish();
    throw;
  }
  rec.completed = true;
  finish();
}

RunManifest Run::execute() {
  cfg_.validate();
  if (cfg_.run_dir.empty()) throw ConfigError("run_dir is required");
  manifest_.run_dir = cfg_.run_dir;
  manifest_.config_hash = cfg_.hash();
  fs::create_directories(cfg_.run_dir);

  // Backends and resources; their identities are manifest inputs.
  if (cfg_.stance.backend == "remote") {
    owned_stance_ = std::make_unique<stance::RemoteStanceBackend>(cfg_.stance.remote);
    stance_ = owned_stance_.get();
  } else if (!cfg_.stance.lexicon.empty()) {
    owned_stance_ = std::make_unique<stance::LexiconStanceBackend>(stance::LexiconStanceBackend::load(cfg_.stance.lexicon));
    stance_ = owned_stance_.get();
  } else {
    stance_ = &stance::LexiconStanceBackend::builtin();
  }
  if (cfg_.toxicity.backend == "perspective") {
    owned_scorer_ = std::make_unique<toxscore::PerspectiveScorer>(cfg_.toxicity.perspective);
    scorer_ = owned_scorer_.get();
  } else if (!cfg_.toxicity.terms.empty()) {
    owned_scorer_ =
        std::make_unique<toxscore::LexicalToxicityScorer>(toxscore::LexicalToxicityScorer::load(cfg_.toxicity.terms));
    scorer_ = owned_scorer_.get();
  } else {
    scorer_ = &toxscore::LexicalToxicityScorer::builtin();
  }
  templates_.emplace(cfg_.templates_dir.empty() ? persona::PromptTemplates::builtin()
                                                : persona::PromptTemplates::load(cfg_.templates_dir));
  entities_.emplace(cfg_.entities.empty() ? corpus::EntityLexicon::builtin() : corpus::EntityLexicon::load(cfg_.entities));
  stop_words_.emplace(cfg_.stop_words.empty() ? corpus::StopWordList::builtin()
                                              : corpus::StopWordList::load(cfg_.stop_words));
  inputs_["templates"] = {{"zero_shot", templates_->zero_shot_digest()}, {"few_shot", templates_->few_shot_digest()}};
  inputs_["entities"] = entities_->digest();
  inputs_["stop_words"] = stop_words_->digest();
  inputs_["stance_backend"] = stance_->identity();
  inputs_["toxicity_scorer"] = scorer_->identity();
  inputs_["tokenizer"] = corpus::RuleTokenizer().name();

  std::size_t next = 0;
  try {
    for (; next < std::size(kStages); ++next) {
      run_stage(kStages[next]);
      if (kStages[next] == opt_.until) break;
    }
  } catch (...) {
    for (std::size_t i = next + 1; i < std::size(kStages); ++i) {
      manifest_.stages.push_back({std::string(to_string(kStages[i])), false, 0.0, "not run"});
      if (kStages[i] == opt_.until) break;
    }
    write_manifest();
    throw;
  }
  manifest_.complete = opt_.until == Stage::Report;
  write_manifest();
  return manifest_;
}

void Run::stage_ingest() {
  std::string all;
  json files = json::array();
  for (const auto& path : cfg_.corpus) {
    std::string bytes = read_file(path);
    files.push_back({{"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    all += bytes;
    if (!bytes.empty() && bytes.back() != '\n') all.push_back('\n');
  }
  inputs_["corpus"] = files;
  std::istringstream in(all);
  auto result = corpus::ingest_tweets(in);
  const auto& r = result.report;
  count("ingest_records", static_cast<std::int64_t>(r.records));
  count("ingest_accepted", static_cast<std::int64_t>(r.accepted));
  count("ingest_rejected_duplicate", static_cast<std::int64_t>(r.rejected_duplicate));
  count("ingest_rejected_malformed", static_cast<std::int64_t>(r.rejected_malformed));
  count("ingest_dangling_parent", static_cast<std::int64_t>(r.dangling_parent));
  corpus_ = std::move(result.corpus);
}

void Run::stage_eligibility() {
  histories_ = corpus::select_eligible_users(corpus_, cfg_.thresholds.min_history);
  count("eligible_users", static_cast<std::int64_t>(histories_.size()));
}

void Run::stage_leaning() {
  // Leaning uses the full history of each eligible user.
  std::vector<std::vector<std::optional<Leaning>>> outcomes(histories_.size());
  parallel_for(histories_.size(), cfg_.workers, [&](std::size_t u) {
    const auto& h = histories_[u].history;
    outcomes[u].resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) outcomes[u][i] = stance::classify_stance(h[i].text, *stance_, cfg_.retry);
  });
  std::int64_t unscored = 0, insufficient = 0;
  for (std::size_t u = 0; u < histories_.size(); ++u) {
    for (const auto& o : outcomes[u]) unscored += o ? 0 : 1;
    try {
      UserCtx ctx;
      ctx.history = &histories_[u];
      ctx.profile = stance::make_leaning_profile(histories_[u].user_id, outcomes[u], cfg_.thresholds.min_history);
      ctx.profile.leaning_class = stance::bin_leaning(ctx.profile.leaning, cfg_.thresholds.leaning_bin);
      users_.push_back(std::move(ctx));
    } catch (const DomainError&) {
      ++insufficient;
    }
  }
  count("history_stance_unscored", unscored);
  count("leaning_insufficient", insufficient);
  count("profiled_users", static_cast<std::int64_t>(users_.size()));
  for (auto c : stance::kAllLeanings) {
    std::int64_t n = 0;
    for (const auto& u : users_) n += u.profile.leaning_class == c ? 1 : 0;
    count("profiled_users_" + class_name(c), n);
  }
}

void Run::stage_simulate() {
  // Candidate pairs: one human reply per (user, parent), the earliest.
  std::int64_t duplicates = 0, unresolved = 0;
  for (std::size_t u = 0; u < users_.size(); ++u) {
    std::set<std::string> parents;
    for (const auto& t : users_[u].history->history) {
      if (!t.parent_id) continue;
      const RawTweet* reply = corpus_.find(t.tweet_id);
      const RawTweet* parent = corpus_.find(*t.parent_id);
      if (parent == nullptr || reply == nullptr) {
        ++unresolved;
        continue;
      }
      if (!parents.insert(*t.parent_id).second) {
        ++duplicates;
        continue;
      }
      candidates_.push_back({u, reply, parent, std::nullopt, std::nullopt});
    }
  }
  count("candidate_pairs", static_cast<std::int64_t>(candidates_.size()));
  count("duplicate_pairs_skipped", duplicates);
  count("unresolved_parent_replies", unresolved);

  const persona::RenderOptions render_opts{cfg_.leaning_format};
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      const std::string key = cfg_.models[m].endpoint.model_id + "/" + std::string(persona::to_string(s));
      std::int64_t ineligible = 0;
      for (std::size_t c = 0; c < candidates_.size(); ++c) {
        const auto& cand = candidates_[c];
        const auto& user = users_[cand.user];
        WorkItem item;
        item.model = m;
        item.strategy = s;
        item.candidate = c;
        persona::PersonaSpec spec;
        if (s == Strategy::ZeroShot) {
          spec = persona::build_zero_shot(user.profile);
        } else {
          try {
            spec = persona::build_few_shot(*user.history, cand.reply->timestamp, cfg_.thresholds.few_shot_n,
                                           cfg_.sample_policy, cfg_.seed);
          } catch (const IneligiblePairError&) {
            ++ineligible;
            continue;
          }
          for (const auto& t : std::get<persona::FewShotPersona>(spec.variant).sample) {
            item.references.push_back(t.text);
          }
        }
        const auto conversation = corpus_.ancestry(cand.parent->tweet_id);
        item.prompt = persona::render_prompt(spec, conversation, *templates_, render_opts);
        items_.push_back(std::move(item));
      }
      count("ineligible_pairs/" + key, ineligible);
    }
  }
  count("work_items", static_cast<std::int64_t>(items_.size()));

  const persona::ResponseCache cache(cfg_.effective_cache_dir());
  std::vector<std::unique_ptr<persona::ChatClient>> clients;
  std::vector<std::unique_ptr<RateLimiter>> limiters;
  std::vector<persona::ModelEndpoint> endpoints;
  for (const auto& mc : cfg_.models) {
    clients.push_back(opt_.client_factory ? opt_.client_factory(mc) : default_client(mc));
    limiters.push_back(std::make_unique<RateLimiter>(mc.endpoint.requests_per_second));
    auto e = mc.endpoint;
    if (mc.mock) e.cache_salt = "mock:" + mc.mock->canonical();
    endpoints.push_back(std::move(e));
  }
  parallel_for(items_.size(), cfg_.workers, [&](std::size_t i) {
    auto& item = items_[i];
    const auto& cand = candidates_[item.candidate];
    const persona::GenerationContext ctx{users_[cand.user].profile.user_id, cand.parent->tweet_id};
    item.record = persona::generate_reply(endpoints[item.model], *clients[item.model], item.prompt, cache, ctx,
                                          cfg_.retry, limiters[item.model].get());
  });

  std::int64_t ok = 0, failed = 0;
  std::string lines;
  for (const auto& item : items_) {
    const auto& r = item.record;
    (r.ok() ? ok : failed) += 1;
    if (r.cache_hit) ++manifest_.cache_hits;
    json line = {{"id", r.id()},
                 {"user_id", r.user_id},
                 {"model_id", r.model_id},
                 {"strategy", std::string(persona::to_string(r.strategy))},
                 {"parent_id", r.parent_id},
                 {"prompt_hash", r.prompt_hash},
                 {"decoding", r.decoding.canonical()},
                 {"status", r.ok() ? "ok" : "failed"},
                 {"reply_text", r.reply_text},
                 {"error", r.error}};
    lines += line.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  manifest_.cache_misses = items_.size() - manifest_.cache_hits;
  for (const auto& c : clients) manifest_.network_calls += c->network_calls();
  count("generated_ok", ok);
  count("generation_failed", failed);
  write_file_atomic(cfg_.run_dir / "generations.jsonl", lines);
  manifest_.artifacts["generations.jsonl"] = sha256_hex(lines);
}

void Run::stage_classify() {
  // Human and agent replies go through the same classifier call.
  parallel_for(candidates_.size(), cfg_.workers, [&](std::size_t c) {
    candidates_[c].label = stance::classify_stance(candidates_[c].reply->text, *stance_, cfg_.retry);
  });
  parallel_for(items_.size(), cfg_.workers, [&](std::size_t i) {
    if (items_[i].record.ok()) items_[i].label = stance::classify_stance(items_[i].record.reply_text, *stance_, cfg_.retry);
  });
  std::int64_t human_unscored = 0, agent_unscored = 0;
  for (const auto& c : candidates_) human_unscored += c.label ? 0 : 1;
  for (const auto& i : items_) agent_unscored += (i.record.ok() && !i.label) ? 1 : 0;
  count("stance_unscored_human", human_unscored);
  count("stance_unscored_agent", agent_unscored);
}

void Run::stage_toxicity() {
  std::set<std::string> unique;
  for (const auto& c : candidates_) unique.insert(c.reply->text);
  for (const auto& i : items_) {
    if (i.record.ok()) unique.insert(i.record.reply_text);
    unique.insert(i.references.begin(), i.references.end());
  }
  const std::vector<std::string> texts(unique.begin(), unique.end());
  std::vector<std::optional<toxscore::ToxicityScore>> scores(texts.size());
  parallel_for(texts.size(), cfg_.workers,
               [&](std::size_t k) { scores[k] = toxscore::score_toxicity(texts[k], *scorer_, cfg_.retry); });
  std::int64_t unscored = 0;
  for (std::size_t k = 0; k < texts.size(); ++k) {
    if (scores[k]) {
      tox_cache_.emplace(texts[k], scores[k]->value);
    } else {
      ++unscored;
    }
  }
  auto lookup = [&](const std::string& t) -> std::optional<double> {
    const auto it = tox_cache_.find(t);
    return it == tox_cache_.end() ? std::nullopt : std::optional<double>(it->second);
  };
  for (auto& c : candidates_) c.toxicity = lookup(c.reply->text);
  for (auto& i : items_) {
    if (i.record.ok()) i.toxicity = lookup(i.record.reply_text);
  }
  count("toxicity_unscored_texts", unscored);
}

std::vector<const WorkItem*> Run::items_for(std::size_t model, Strategy s) const {
  std::vector<const WorkItem*> out;
  for (const auto& i : items_) {
    if (i.model == model && i.strategy == s && i.record.ok()) out.push_back(&i);
  }
  return out;
}

void Run::stage_metrics() {
  const corpus::RuleTokenizer tokenizer(*entities_, *stop_words_);
  table_leaning_profiles();
  table_diversity(tokenizer);
  table_transitions();
  table_consistency();
  table_toxicity();
  table_exaggeration();
  table_anomalies(tokenizer);
}

void Run::table_leaning_profiles() {
  Table t{"leaning_profiles", {"user_id", "leaning", "leaning_class", "scored", "unscored"}, {}};
  for (const auto& u : users_) {
    const auto& p = u.profile;
    t.add_row({p.user_id, p.leaning, class_name(p.leaning_class), static_cast<std::int64_t>(p.scored),
               static_cast<std::int64_t>(p.unscored)});
  }
  tables_.push_back(std::move(t));
}

void Run::table_diversity(const corpus::Tokenizer& tokenizer) {
  Table t{"diversity_curves",
          {"source", "model", "strategy", "leaning_class", "metric", "prefix_size", "mean", "ci_low", "ci_high",
           "n_orderings", "n_boot", "seed", "skipped_empty"},
          {}};
  std::int64_t skipped = 0;
  auto emit = [&](const std::string& source, const std::string& model, const std::string& strategy, Leaning c,
                  const std::vector<const std::string*>& texts) {
    if (texts.empty()) return;
    std::vector<corpus::TokenizedDoc> docs;
    docs.reserve(texts.size());
    for (const auto* s : texts) docs.push_back(tokenizer.tokenize(*s));
    metrics::CurveOptions o;
    o.metric = cfg_.diversity_metric;
    o.n_orderings = cfg_.thresholds.n_orderings;
    o.n_boot = cfg_.thresholds.n_boot;
    o.alpha = cfg_.thresholds.logttr_alpha;
    o.confidence = cfg_.thresholds.confidence;
    o.quantile_method = cfg_.quantile_method;
    o.workers = cfg_.workers;
    o.seed = derive_seed(cfg_.seed, digest64(source + "|" + model + "|" + strategy + "|" + class_name(c)));
    const auto curve = metrics::incremental_diversity_curve(docs, o);
    skipped += static_cast<std::int64_t>(curve.skipped_empty);
    for (std::size_t k = 0; k < curve.size(); ++k) {
      t.add_row({source, model, strategy, class_name(c), std::string(metrics::to_string(curve.metric)),
                 static_cast<std::int64_t>(curve.prefix_sizes[k]), curve.mean[k], curve.ci_low[k], curve.ci_high[k],
                 static_cast<std::int64_t>(curve.n_orderings), static_cast<std::int64_t>(curve.n_boot),
                 std::to_string(curve.seed), static_cast<std::int64_t>(curve.skipped_empty)});
    }
  };
  for (auto c : stance::kAllLeanings) {
    std::vector<const std::string*> texts;
    for (const auto& cand : candidates_) {
      if (users_[cand.user].profile.leaning_class == c) texts.push_back(&cand.reply->text);
    }
    emit("human", "", "", c, texts);
  }
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      for (auto c : stance::kAllLeanings) {
        std::vector<const std::string*> texts;
        for (const auto* i : items_for(m, s)) {
          if (users_[candidates_[i->candidate].user].profile.leaning_class == c) texts.push_back(&i->record.reply_text);
        }
        emit("agent", cfg_.models[m].endpoint.model_id, std::string(persona::to_string(s)), c, texts);
      }
    }
  }
  count("diversity_empty_docs_skipped", skipped);
  tables_.push_back(std::move(t));
}

void Run::table_transitions() {
  Table t{"transition_matrices",
          {"source", "model", "strategy", "user_class", "reply_label", "count", "row_total", "probability"},
          {}};
  auto emit = [&](const std::string& source, const std::string& model, const std::string& strategy,
                  const std::vector<std::pair<Leaning, Leaning>>& pairs) {
    const auto mtx = stance::conditional_leaning_distribution(pairs);
    for (auto uc : stance::kAllLeanings) {
      for (auto rl : stance::kAllLeanings) {
        const auto r = stance::index_of(uc), col = stance::index_of(rl);
        t.add_row({source, model, strategy, class_name(uc), class_name(rl),
                   static_cast<std::int64_t>(mtx.counts[r][col]), static_cast<std::int64_t>(mtx.row_count[r]),
                   mtx.row_defined(uc) ? Cell(mtx.probability[r][col]) : Cell(std::monostate{})});
      }
    }
  };
  std::vector<std::pair<Leaning, Leaning>> human;
  for (const auto& c : candidates_) {
    if (c.label) human.emplace_back(users_[c.user].profile.leaning_class, *c.label);
  }
  emit("human", "", "", human);
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      std::vector<std::pair<Leaning, Leaning>> pairs;
      for (const auto* i : items_for(m, s)) {
        if (i->label) pairs.emplace_back(users_[candidates_[i->candidate].user].profile.leaning_class, *i->label);
      }
      emit("agent", cfg_.models[m].endpoint.model_id, std::string(persona::to_string(s)), pairs);
    }
  }
  tables_.push_back(std::move(t));
}

void Run::table_consistency() {
  Table t{"consistency",
          {"model", "strategy", "leaning_class", "users", "replies", "loss_human", "loss_agent", "consistency_human",
           "consistency_agent", "defined"},
          {}};
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      // Both populations are restricted to pairs where both labels exist.
      std::vector<metrics::LabeledReply> human, agent;
      for (const auto* i : items_for(m, s)) {
        const auto& cand = candidates_[i->candidate];
        if (!i->label || !cand.label) continue;
        const auto& p = users_[cand.user].profile;
        human.push_back({p.user_id, cand.parent->tweet_id, p.leaning_class, *cand.label});
        agent.push_back({p.user_id, cand.parent->tweet_id, p.leaning_class, *i->label});
      }
      const auto pairs = metrics::align_replies(human, agent);
      const auto key = cfg_.models[m].endpoint.model_id + "/" + std::string(persona::to_string(s));
      count("consistency_pairs/" + key, static_cast<std::int64_t>(pairs.size()));
      const auto report = metrics::aggregate_consistency(pairs);
      for (auto c : stance::kAllLeanings) {
        const auto& e = report.at(c);
        const Cell undefined = std::monostate{};
        t.add_row({cfg_.models[m].endpoint.model_id, std::string(persona::to_string(s)), class_name(c),
                   static_cast<std::int64_t>(e.users), static_cast<std::int64_t>(e.replies),
                   e.defined ? Cell(e.loss_human) : undefined, e.defined ? Cell(e.loss_agent) : undefined,
                   e.defined ? Cell(e.consistency_human) : undefined,
                   e.defined ? Cell(e.consistency_agent) : undefined, e.defined});
      }
    }
  }
  tables_.push_back(std::move(t));
}

void Run::table_toxicity() {
  const double threshold = cfg_.thresholds.toxicity;
  Table fractions{"toxicity_fractions",
                  {"source", "model", "strategy", "leaning_class", "scored", "toxic", "fraction", "threshold"},
                  {}};
  auto emit = [&](const std::string& source, const std::string& model, const std::string& strategy,
                  const std::string& cls, const std::vector<double>& scores) {
    std::int64_t toxic = 0;
    for (double v : scores) toxic += v > threshold ? 1 : 0;
    fractions.add_row({source, model, strategy, cls, static_cast<std::int64_t>(scores.size()), toxic,
                       scores.empty() ? Cell(std::monostate{}) : Cell(toxscore::toxic_fraction(scores, threshold)),
                       threshold});
  };
  {
    std::map<std::string, std::vector<double>> by_class;
    for (const auto& c : candidates_) {
      if (!c.toxicity) continue;
      by_class["all"].push_back(*c.toxicity);
      by_class[class_name(users_[c.user].profile.leaning_class)].push_back(*c.toxicity);
    }
    emit("human", "", "", "all", by_class["all"]);
    for (auto c : stance::kAllLeanings) emit("human", "", "", class_name(c), by_class[class_name(c)]);
  }

  Table percentiles{"toxicity_percentiles",
                    {"model", "leaning_class", "rank", "percentile", "count", "total", "mean", "mass_above_half"},
                    {}};
  std::int64_t unranked = 0;
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      const auto model = cfg_.models[m].endpoint.model_id;
      const auto strategy = std::string(persona::to_string(s));
      std::map<std::string, std::vector<double>> by_class;
      std::map<std::string, std::vector<toxscore::PercentileRank>> ranks;
      for (const auto* i : items_for(m, s)) {
        if (!i->toxicity) continue;
        const auto cls = class_name(users_[candidates_[i->candidate].user].profile.leaning_class);
        by_class["all"].push_back(*i->toxicity);
        by_class[cls].push_back(*i->toxicity);
        if (s != Strategy::FewShot) continue;
        std::vector<double> refs;
        for (const auto& text : i->references) {
          const auto it = tox_cache_.find(text);
          if (it != tox_cache_.end()) refs.push_back(it->second);
        }
        if (refs.size() != i->references.size() || refs.empty()) {
          ++unranked;
          continue;
        }
        const auto rank = toxscore::percentile_rank(*i->toxicity, toxscore::ReferenceSet(std::move(refs)));
        ranks["all"].push_back(rank);
        ranks[cls].push_back(rank);
      }
      emit("agent", model, strategy, "all", by_class["all"]);
      for (auto c : stance::kAllLeanings) emit("agent", model, strategy, class_name(c), by_class[class_name(c)]);
      if (s != Strategy::FewShot) continue;
      few_shot_ranked_ += ranks["all"].size();
      std::vector<std::string> groups{"all"};
      for (auto c : stance::kAllLeanings) groups.push_back(class_name(c));
      for (const auto& g : groups) {
        if (ranks[g].empty()) continue;
        const auto h = toxscore::percentile_histogram(ranks[g]);
        for (std::size_t k = 0; k < h.counts.size(); ++k) {
          percentiles.add_row({model, g, static_cast<std::int64_t>(k),
                               static_cast<double>(k) / static_cast<double>(h.reference_size),
                               static_cast<std::int64_t>(h.counts[k]), static_cast<std::int64_t>(h.total), h.mean,
                               h.mass_above_half});
        }
      }
    }
  }
  count("few_shot_unranked", unranked);
  count("few_shot_ranked", static_cast<std::int64_t>(few_shot_ranked_));
  tables_.push_back(std::move(fractions));
  if (few_shot_ranked_ > 0) {
    tables_.push_back(std::move(percentiles));
  } else {
    manifest_.notes.push_back("toxicity_percentiles omitted: no scored few-shot replies");
  }
}

void Run::table_exaggeration() {
  Table t{"exaggeration",
          {"model", "strategy", "leaning_class", "kind", "token", "human_rel_freq", "llm_rel_freq", "ratio",
           "human_tweets_with", "llm_tweets_with", "human_tweets", "llm_tweets"},
          {}};
  std::array<std::vector<corpus::MarkerCounts>, 3> human;
  for (const auto& c : candidates_) {
    human[stance::index_of(users_[c.user].profile.leaning_class)].push_back(corpus::extract_markers(c.reply->text));
  }
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      std::array<std::vector<corpus::MarkerCounts>, 3> llm;
      for (const auto* i : items_for(m, s)) {
        llm[stance::index_of(users_[candidates_[i->candidate].user].profile.leaning_class)].push_back(
            corpus::extract_markers(i->record.reply_text));
      }
      for (auto c : stance::kAllLeanings) {
        const auto ci = stance::index_of(c);
        if (human[ci].empty() || llm[ci].empty()) continue;
        for (auto kind : {corpus::MarkerKind::Emoji, corpus::MarkerKind::Hashtag}) {
          const auto table = metrics::exaggeration_ratios(human[ci], llm[ci], kind, c);
          for (const auto& r : table.rows) {
            t.add_row({cfg_.models[m].endpoint.model_id, std::string(persona::to_string(s)), class_name(c),
                       std::string(corpus::to_string(kind)), r.token, r.human_rel_freq, r.llm_rel_freq, r.ratio,
                       static_cast<std::int64_t>(r.human_tweets_with), static_cast<std::int64_t>(r.llm_tweets_with),
                       static_cast<std::int64_t>(table.human_tweets), static_cast<std::int64_t>(table.llm_tweets)});
          }
        }
      }
    }
  }
  tables_.push_back(std::move(t));
}

void Run::table_anomalies(const corpus::Tokenizer& tokenizer) {
  const std::size_t limit = cfg_.thresholds.length_limit;
  Table anomalies{"anomalies",
                  {"source", "model", "strategy", "count", "q1", "q3", "iqr", "lower", "upper", "percentile_of_limit",
                   "anomalies", "limit", "quantile_method"},
                  {}};
  Table stats{"text_stats",
              {"source", "model", "strategy", "leaning_class", "replies", "mean_chars", "mean_tokens", "emoji_share",
               "hashtag_share", "mention_share"},
              {}};
  std::int64_t agent_anomalies = 0;
  auto emit = [&](const std::string& source, const std::string& model, const std::string& strategy,
                  const std::vector<std::pair<Leaning, const std::string*>>& texts) {
    if (!texts.empty()) {
      std::vector<std::size_t> lengths;
      for (const auto& [c, s] : texts) lengths.push_back(utf8::length(*s));
      const auto r = metrics::length_anomaly_report(lengths, limit, cfg_.quantile_method);
      if (source == "agent") agent_anomalies += static_cast<std::int64_t>(r.anomalies);
      anomalies.add_row({source, model, strategy, static_cast<std::int64_t>(r.count), r.q1, r.q3, r.iqr, r.lower,
                         r.upper, r.percentile_of_limit, static_cast<std::int64_t>(r.anomalies),
                         static_cast<std::int64_t>(r.limit), std::string(metrics::to_string(r.method))});
    }
    for (auto c : stance::kAllLeanings) {
      CompensatedSum chars, tokens, emoji, hashtag, mention;
      std::size_t n = 0;
      for (const auto& [cls, s] : texts) {
        if (cls != c) continue;
        ++n;
        chars.add(static_cast<double>(utf8::length(*s)));
        tokens.add(static_cast<double>(tokenizer.tokenize(*s).num_tokens));
        const auto mk = corpus::extract_markers(*s);
        emoji.add(mk.has_emoji ? 1.0 : 0.0);
        hashtag.add(mk.has_hashtag ? 1.0 : 0.0);
        mention.add(mk.has_mention ? 1.0 : 0.0);
      }
      if (n == 0) continue;
      const double d = static_cast<double>(n);
      stats.add_row({source, model, strategy, class_name(c), static_cast<std::int64_t>(n), chars.value() / d,
                     tokens.value() / d, emoji.value() / d, hashtag.value() / d, mention.value() / d});
    }
  };
  std::vector<std::pair<Leaning, const std::string*>> human;
  for (const auto& c : candidates_) human.emplace_back(users_[c.user].profile.leaning_class, &c.reply->text);
  emit("human", "", "", human);
  for (std::size_t m = 0; m < cfg_.models.size(); ++m) {
    for (Strategy s : cfg_.strategies) {
      std::vector<std::pair<Leaning, const std::string*>> texts;
      for (const auto* i : items_for(m, s)) {
        texts.emplace_back(users_[candidates_[i->candidate].user].profile.leaning_class, &i->record.reply_text);
      }
      emit("agent", cfg_.models[m].endpoint.model_id, std::string(persona::to_string(s)), texts);
    }
  }
  count("agent_length_anomalies", agent_anomalies);
  tables_.push_back(std::move(anomalies));
  tables_.push_back(std::move(stats));
}

void Run::stage_report() {
  const fs::path dir = cfg_.run_dir / "tables";
  // Stale tables from an earlier run (e.g. an omitted percentile table)
  // must not survive into this bundle.
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (ext == ".csv" || ext == ".json") fs::remove(entry.path());
    }
  }
  for (const auto& t : tables_) {
    const std::string csv = to_csv(t);
    const std::string js = to_json(t);
    write_file_atomic(dir / (t.name + ".csv"), csv);
    write_file_atomic(dir / (t.name + ".json"), js);
    manifest_.artifacts["tables/" + t.name + ".csv"] = sha256_hex(csv);
    manifest_.artifacts["tables/" + t.name + ".json"] = sha256_hex(js);
  }
}

void Run::write_manifest() {
  json hashed;
  hashed["code_version"] = GENEX_VERSION;
  hashed["config_hash"] = manifest_.config_hash;
  hashed["config"] = json::parse(cfg_.canonical_json());
  hashed["inputs"] = inputs_;
  hashed["quantile_method"] = std::string(metrics::to_string(cfg_.quantile_method));
  hashed["counts"] = manifest_.counts;
  json stages = json::array();
  json wall = json::object();
  for (const auto& s : manifest_.stages) {
    stages.push_back({{"name", s.name}, {"completed", s.completed}, {"error", s.error}});
    wall[s.name] = s.wall_ms;
  }
  hashed["stages"] = stages;
  hashed["notes"] = manifest_.notes;
  hashed["artifacts"] = manifest_.artifacts;
  hashed["complete"] = manifest_.complete;
  const std::string canonical = hashed.dump(-1, ' ', false, json::error_handler_t::replace);
  manifest_.manifest_hash = sha256_hex(canonical);

  json out;
  out["manifest_hash"] = manifest_.manifest_hash;
  out["hashed"] = hashed;
  out["runtime"] = {{"wall_ms", wall},
                    {"cache_hits", manifest_.cache_hits},
                    {"cache_misses", manifest_.cache_misses},
                    {"network_calls", manifest_.network_calls},
                    {"workers", cfg_.workers},
                    {"cache_dir", cfg_.effective_cache_dir().string()}};
  manifest_.json = out.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
  write_file_atomic(cfg_.run_dir / "manifest.json", manifest_.json);
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Eligibility: return "eligibility";
    case Stage::Leaning: return "leaning";
    case Stage::Simulate: return "simulate";
    case Stage::Classify: return "classify";
    case Stage::Toxicity: return "toxicity";
    case Stage::Metrics: return "metrics";
    case Stage::Report: return "report";
  }
  return "?";
}

Stage stage_from_string(std::string_view s) {
  for (Stage st : kStages) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown stage '" + std::string(s) + "'");
}

std::unique_ptr<persona::ChatClient> default_client(const ModelConfig& model) {
  if (model.endpoint.provider == "mock") {
    MockProfile p = model.mock.value_or(MockProfile{});
    return std::make_unique<MockChatClient>(p);
  }
  return std::make_unique<persona::HttpChatClient>(model.endpoint);
}

RunManifest run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  // Mock seeds left at 0 follow the run seed, so changing the seed changes
  // the simulated replies.
  RunConfig effective = config;
  for (auto& m : effective.models) {
    if (m.mock && m.mock->seed == 0) m.mock->seed = derive_seed(config.seed, digest64(m.endpoint.model_id));
  }
  Run run(effective, options);
  return run.execute();
}

std::string first_difference(const RunManifest& a, const RunManifest& b) {
  std::set<std::string> names;
  for (const auto& [k, v] : a.artifacts) names.insert(k);
  for (const auto& [k, v] : b.artifacts) names.insert(k);
  for (const auto& n : names) {
    const auto ia = a.artifacts.find(n);
    const auto ib = b.artifacts.find(n);
    if (ia == a.artifacts.end() || ib == b.artifacts.end() || ia->second != ib->second) return n;
  }
  if (a.counts != b.counts) return "counts";
  if (a.manifest_hash != b.manifest_hash) return "manifest";
  return {};
}

VerifyReport verify_determinism(const RunConfig& config, std::size_t repetitions, const PipelineOptions& options) {
  VerifyReport report;
  std::vector<RunManifest> runs;
  const unsigned base = std::max(1u, config.workers);
  for (std::size_t i = 0; i < repetitions; ++i) {
    RunConfig c = config;
    c.run_dir = config.run_dir / "verify" / ("run_" + std::to_string(i));
    c.cache_dir.clear();
    c.use_cache = true;
    c.workers = i % 2 == 0 ? base : base + 1;
    if (fs::exists(c.run_dir)) fs::remove_all(c.run_dir);
    runs.push_back(run_pipeline(c, options));
    report.hashes.push_back(runs.back().manifest_hash);
    report.workers.push_back(c.workers);
  }
  report.identical = true;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto diff = first_difference(runs[0], runs[i]);
    if (!diff.empty()) {
      report.identical = false;
      report.first_difference = "run " + std::to_string(i) + ": " + diff;
      break;
    }
  }
  return report;
}

}  // namespace genex::harness
