#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "webcorpus/webcorpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webcorpus;

namespace {

bool g_json = false;

void emit(const json& result, const std::string& human) {
  if (g_json)
    std::cout << result.dump(2) << "\n";
  else
    std::cout << human << "\n";
}

std::string require_file(const std::string& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path);
  return read_file(path);
}

// Shared SGD hyper-parameter flags; the CLI insists on a positive rate even
// though the library admits zero.
void add_train_flags(CLI::App* cmd, TrainConfig& train, std::string& loss_name) {
  cmd->add_option("--alpha0", train.alpha0, "Initial learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--epochs", train.epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--decay-every", train.decay_every, "Epochs between rate decays")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--gamma", train.gamma, "Rate decay factor")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  cmd->add_option("--l2", train.l2, "L2 penalty")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--loss", loss_name, "Pairwise loss: logistic or hinge")
      ->check(CLI::IsMember({"logistic", "hinge"}))
      ->capture_default_str();
}

json report_to_json(const EvalReport& report) {
  json j;
  j["protocol"] = report.protocol;
  j["split_accuracies"] = report.split_accuracies;
  j["mean"] = report.mean;
  j["std"] = report.stddev;
  json echo = json::object();
  for (const auto& [k, v] : report.config_echo) echo[k] = v;
  j["config"] = echo;
  return j;
}

void maybe_write_report(const EvalReport& report, const std::string& path) {
  if (!path.empty()) write_file(path, report.serialize_csv());
}

void setup_expand(CLI::App& app) {
  auto cmd = app.add_subcommand("expand", "Expand taxonomy classes into search query lists");
  struct Opts {
    std::string taxonomy, overrides, lexicon, out;
    std::vector<std::string> languages;
    std::vector<std::string> classes;
    size_t list_size = 100;
    bool full_lemma = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--taxonomy", opts->taxonomy, "Taxonomy TSV")->required();
  cmd->add_option("--overrides", opts->overrides, "Parent-term override TSV");
  cmd->add_option("--lexicon", opts->lexicon, "Translation lexicon TSV");
  cmd->add_option("--language", opts->languages, "Translation language (repeatable)");
  cmd->add_flag("--full-lemma", opts->full_lemma, "Translate lemma words too");
  cmd->add_option("--classes", opts->classes, "Restrict to these class ids");
  cmd->add_option("--list-size", opts->list_size, "Classes per query list file")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", opts->out, "Output directory")->required();

  cmd->callback([opts] {
    Taxonomy taxonomy = Taxonomy::parse(require_file(opts->taxonomy));
    OverrideMap overrides;
    if (!opts->overrides.empty()) overrides = parse_overrides(require_file(opts->overrides));
    Lexicon lexicon;
    if (!opts->lexicon.empty()) lexicon = Lexicon::parse(require_file(opts->lexicon));
    if (!opts->languages.empty() && opts->lexicon.empty())
      throw Error("--language requires --lexicon");

    std::vector<std::string> class_ids = opts->classes;
    if (class_ids.empty())
      for (const auto& node : taxonomy.nodes()) class_ids.push_back(node.id);

    std::vector<QuerySpec> specs;
    std::vector<std::string> warnings;
    for (const auto& id : class_ids) {
      QuerySpec spec = expand_queries(taxonomy, id, overrides);
      if (!opts->languages.empty()) {
        TranslateResult translated =
            translate_queries(spec, lexicon, opts->languages, opts->full_lemma);
        spec = std::move(translated.spec);
        for (auto& w : translated.warnings) warnings.push_back(std::move(w));
      }
      specs.push_back(std::move(spec));
    }
    for (const auto& w : warnings) log(LogLevel::warn, w);

    fs::create_directories(opts->out);
    write_file(fs::path(opts->out) / "queries.tsv", serialize_query_specs(specs));
    auto lists = build_query_lists(specs, opts->list_size);
    auto paths = write_query_lists(lists, opts->out);

    size_t total_queries = 0;
    for (const auto& s : specs) total_queries += s.queries.size();
    json result;
    result["classes"] = specs.size();
    result["queries"] = total_queries;
    result["lists"] = paths.size();
    result["warnings"] = warnings;
    std::vector<std::string> files{(fs::path(opts->out) / "queries.tsv").string()};
    for (const auto& p : paths) files.push_back(p.string());
    result["files"] = files;
    emit(result, "expanded " + std::to_string(specs.size()) + " classes into " +
                     std::to_string(total_queries) + " queries across " +
                     std::to_string(paths.size()) + " list files");
  });
}

void setup_harvest(CLI::App& app) {
  auto cmd = app.add_subcommand("harvest", "Collect image URLs for expanded queries");
  struct Opts {
    std::string queries, manifest, provider = "fixture", provider_root;
    size_t cap = 10000;
    double rate_limit = 0;
    int retries = 3;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--queries", opts->queries, "Query spec TSV from expand")->required();
  cmd->add_option("--manifest", opts->manifest, "Manifest JSONL to append to")->required();
  cmd->add_option("--provider", opts->provider, "Search provider (fixture)")
      ->check(CLI::IsMember({"fixture"}))
      ->capture_default_str();
  cmd->add_option("--provider-root", opts->provider_root, "Fixture page directory");
  cmd->add_option("--cap", opts->cap, "Per-query unique URL cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--rate-limit", opts->rate_limit, "Search requests per second (0 = unlimited)")
      ->capture_default_str();
  cmd->add_option("--retries", opts->retries, "Attempts per page")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  cmd->callback([opts] {
    if (opts->provider_root.empty()) throw Error("--provider-root is required for fixture");
    FixtureProvider provider{fs::path(opts->provider_root)};

    auto specs = parse_query_specs(require_file(opts->queries));
    Manifest manifest;
    if (fs::exists(opts->manifest)) {
      auto loaded = Manifest::load(opts->manifest);
      if (loaded.warning) log(LogLevel::warn, *loaded.warning);
      manifest = std::move(loaded.manifest);
    }
    std::set<std::pair<std::string, std::string>> existing;
    for (const auto& r : manifest.records()) existing.insert({r.class_id, r.url});

    ManifestWriter writer{opts->manifest};
    RetryPolicy retry;
    retry.attempts = opts->retries;
    TokenBucket bucket(opts->rate_limit);
    TokenBucket* limiter = opts->rate_limit > 0 ? &bucket : nullptr;

    json per_class = json::object();
    std::vector<std::string> errors;
    size_t appended = 0, total = 0;
    for (const auto& spec : specs) {
      CollectResult r = collect_class_hits(provider, spec.texts(), opts->cap, retry, limiter);
      if (r.error) {
        errors.push_back(spec.class_id + ": " + *r.error);
        log(LogLevel::warn, "harvest " + spec.class_id + ": " + *r.error);
      }
      size_t fresh = 0;
      for (const auto& hit : r.hits) {
        ++total;
        if (!existing.insert({spec.class_id, hit.url}).second) continue;
        ImageRecord rec;
        rec.class_id = spec.class_id;
        rec.url = hit.url;
        rec.provider = hit.provider;
        rec.rank = hit.rank;
        rec.status = FetchStatus::pending;
        rec.fetched_at = iso8601_now();
        writer.append(rec);
        ++appended;
        ++fresh;
      }
      per_class[spec.class_id] = {{"urls", r.hits.size()},
                                  {"new", fresh},
                                  {"truncated_at_cap", r.truncated_at_cap}};
    }
    if (!errors.empty() && total == 0) throw Error("harvest produced no URLs: " + join(errors, "; "));

    json result;
    result["classes"] = specs.size();
    result["urls"] = total;
    result["appended"] = appended;
    result["per_class"] = per_class;
    result["errors"] = errors;
    emit(result, "harvested " + std::to_string(total) + " URLs (" + std::to_string(appended) +
                     " new) across " + std::to_string(specs.size()) + " classes");
  });
}

void setup_download(CLI::App& app) {
  auto cmd = app.add_subcommand("download", "Fetch pending manifest URLs into class directories");
  struct Opts {
    std::string manifest, out, user_agent = "webcorpus/0.1";
    int workers = 4, timeout_ms = 10000, min_width = 0, min_height = 0, retries = 3;
    double rate_limit = 2.0;
    bool retry_failed = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--manifest", opts->manifest, "Manifest JSONL")->required();
  cmd->add_option("--out", opts->out, "Image root directory")->required();
  cmd->add_option("--workers", opts->workers, "Concurrent downloads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--rate-limit", opts->rate_limit, "Requests per second (0 = unlimited)")
      ->capture_default_str();
  cmd->add_option("--timeout-ms", opts->timeout_ms, "Per-request timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-width", opts->min_width, "Reject images narrower than this")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--min-height", opts->min_height, "Reject images shorter than this")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--retries", opts->retries, "Attempts per URL")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--retry-failed", opts->retry_failed, "Re-attempt previously failed URLs");
  cmd->add_option("--user-agent", opts->user_agent, "User-Agent header")->capture_default_str();

  cmd->callback([opts] {
    auto loaded = Manifest::load(opts->manifest);
    if (loaded.warning) log(LogLevel::warn, *loaded.warning);
    Manifest manifest = std::move(loaded.manifest);

    std::map<std::string, std::vector<ImageHit>> hits_by_class;
    Manifest effective = manifest.effective();
    for (const auto& r : effective.records())
      hits_by_class[r.class_id].push_back({r.url, "", r.provider, 0, r.rank});

    DownloadPolicy policy;
    policy.workers = opts->workers;
    policy.rate_limit = opts->rate_limit;
    policy.timeout = std::chrono::milliseconds(opts->timeout_ms);
    policy.min_width = opts->min_width;
    policy.min_height = opts->min_height;
    policy.retry.attempts = opts->retries;
    policy.retry_failed = opts->retry_failed;
    policy.user_agent = opts->user_agent;

    ManifestWriter writer{opts->manifest};
    size_t before = manifest.size();
    download_batch(manifest, hits_by_class, opts->out, policy, &writer);

    std::map<std::string, size_t> by_status;
    for (size_t i = before; i < manifest.records().size(); ++i)
      ++by_status[to_string(manifest.records()[i].status)];
    json result;
    result["attempted"] = manifest.size() - before;
    for (const auto& [k, v] : by_status) result[k] = v;
    emit(result, "downloaded " + std::to_string(by_status["downloaded"]) + ", failed " +
                     std::to_string(by_status["failed"]) + ", rejected " +
                     std::to_string(by_status["rejected"]) + " of " +
                     std::to_string(manifest.size() - before) + " attempts");
  });
}

void setup_dedup(CLI::App& app) {
  auto cmd = app.add_subcommand("dedup", "Remove near-duplicate images by perceptual hash");
  struct Opts {
    std::string manifest, report, hash_dump;
    int threshold = 5;
    bool global = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--manifest", opts->manifest, "Manifest JSONL")->required();
  cmd->add_option("--threshold", opts->threshold, "Hamming distance threshold")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--global", opts->global, "Dedup across classes, not within");
  cmd->add_option("--report", opts->report, "Write dedup report CSV here");
  cmd->add_option("--hash-dump", opts->hash_dump, "Write hash dump CSV here");

  cmd->callback([opts] {
    auto loaded = Manifest::load(opts->manifest);
    if (loaded.warning) log(LogLevel::warn, *loaded.warning);
    ManifestWriter writer{opts->manifest};
    DedupOutcome outcome = apply_dedup(loaded.manifest, opts->threshold, opts->global, &writer);

    if (!opts->report.empty()) write_file(opts->report, serialize_dedup_report(outcome.report));
    if (!opts->hash_dump.empty())
      write_file(opts->hash_dump, serialize_hash_dump(outcome.manifest.records()));

    size_t kept = 0;
    for (const auto& r : outcome.manifest.records())
      if (r.status == FetchStatus::downloaded) ++kept;
    json result;
    result["hashed"] = outcome.hashed;
    result["undecodable"] = outcome.undecodable;
    result["removed"] = outcome.report.size();
    result["kept"] = kept;
    emit(result, "hashed " + std::to_string(outcome.hashed) + ", removed " +
                     std::to_string(outcome.report.size()) + " duplicates, kept " +
                     std::to_string(kept) + " images");
  });
}

void setup_split(CLI::App& app) {
  auto cmd = app.add_subcommand("split", "Produce a dataset split listing from a manifest");
  struct Opts {
    std::string manifest, out, materialize, strategy = "chronological";
    size_t per_class = 0;
    uint64_t seed = 0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--manifest", opts->manifest, "Manifest JSONL")->required();
  cmd->add_option("--strategy", opts->strategy, "chronological or random")
      ->check(CLI::IsMember({"chronological", "random"}))
      ->capture_default_str();
  cmd->add_option("--per-class", opts->per_class, "Images per class (0 = all)")
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "Random strategy seed")->capture_default_str();
  cmd->add_option("--out", opts->out, "Split listing TSV path")->required();
  cmd->add_option("--materialize", opts->materialize, "Copy split images under this directory");

  cmd->callback([opts] {
    auto loaded = Manifest::load(opts->manifest);
    if (loaded.warning) log(LogLevel::warn, *loaded.warning);
    SplitConfig config;
    config.strategy = opts->strategy == "random" ? SplitStrategy::random
                                                 : SplitStrategy::controlled_chronological;
    if (opts->per_class > 0) config.per_class_target = opts->per_class;
    config.seed = opts->seed;
    SplitListing listing = make_split(loaded.manifest, config);
    write_file(opts->out, listing.serialize());
    if (!opts->materialize.empty()) materialize_split(listing, opts->materialize);

    std::set<std::string> classes;
    for (const auto& r : listing.rows) classes.insert(r.class_id);
    json result;
    result["rows"] = listing.rows.size();
    result["classes"] = classes.size();
    result["shortfalls"] = listing.shortfalls;
    result["out"] = opts->out;
    emit(result, "split has " + std::to_string(listing.rows.size()) + " rows over " +
                     std::to_string(classes.size()) + " classes (" +
                     std::to_string(listing.shortfalls.size()) + " shortfalls)");
  });
}

void setup_stats(CLI::App& app) {
  auto cmd = app.add_subcommand("stats", "Report corpus statistics");
  struct Opts {
    std::string manifest, split, out;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--manifest", opts->manifest, "Manifest JSONL");
  cmd->add_option("--split", opts->split, "Split listing TSV");
  cmd->add_option("--out", opts->out, "Write stats CSV here (default stdout)");

  cmd->callback([opts] {
    if (opts->manifest.empty() == opts->split.empty())
      throw Error("exactly one of --manifest or --split is required");
    CorpusStats stats;
    if (!opts->manifest.empty()) {
      auto loaded = Manifest::load(opts->manifest);
      if (loaded.warning) log(LogLevel::warn, *loaded.warning);
      stats = compute_stats(loaded.manifest);
    } else {
      stats = compute_stats(SplitListing::parse(require_file(opts->split)));
    }
    std::string csv = stats.serialize();
    if (!opts->out.empty()) write_file(opts->out, csv);

    json result;
    result["classes"] = stats.per_class.size();
    result["total"] = stats.total;
    result["average"] = stats.average;
    result["min"] = stats.min;
    result["max"] = stats.max;
    result["per_class"] = stats.per_class;
    if (g_json)
      std::cout << result.dump(2) << "\n";
    else if (opts->out.empty())
      std::cout << csv;
    else
      std::cout << "wrote stats for " << stats.per_class.size() << " classes to " << opts->out
                << "\n";
  });
}

void setup_train_shallow(CLI::App& app) {
  auto cmd = app.add_subcommand("train-shallow", "Train a linear classifier on a feature table");
  struct Opts {
    std::string features, loss_name = "logistic";
    TrainConfig train;
    bool ovo = false;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--features", opts->features, "Feature CSV")->required();
  cmd->add_flag("--ovo", opts->ovo, "Train one-vs-one pairwise models instead of softmax");
  cmd->add_option("--seed", opts->train.seed, "Shuffle seed")->capture_default_str();
  add_train_flags(cmd, opts->train, opts->loss_name);

  cmd->callback([opts] {
    opts->train.loss = opts->loss_name == "hinge" ? PairwiseLoss::hinge : PairwiseLoss::logistic;
    FeatureTable table = FeatureTable::parse(require_file(opts->features));
    LabelCodec codec = LabelCodec::fit(table);
    Matrix X = table.matrix();
    std::vector<size_t> y = codec.encode_all(table);

    json result;
    result["samples"] = table.rows.size();
    result["classes"] = codec.classes.size();
    result["dim"] = table.dim();
    std::string human;
    if (opts->ovo) {
      OneVsOneModel model = train_one_vs_one(X, y, codec.classes.size(), opts->train);
      double acc = pooled_accuracy(predict_all_one_vs_one(model, X), y);
      result["pairwise_models"] = model.pairs.size();
      result["train_accuracy"] = acc;
      human = "trained " + std::to_string(model.pairs.size()) +
              " pairwise models, training accuracy " + format_double(acc);
    } else {
      TrainResult trained = train_softmax(X, y, codec.classes.size(), opts->train);
      std::vector<size_t> predicted(X.rows());
      for (size_t i = 0; i < X.rows(); ++i) predicted[i] = trained.model.predict(X.row(i));
      double acc = pooled_accuracy(predicted, y);
      result["final_loss"] = trained.final_loss;
      result["train_accuracy"] = acc;
      human = "trained softmax, final loss " + format_double(trained.final_loss) +
              ", training accuracy " + format_double(acc);
    }
    emit(result, human);
  });
}

void setup_eval_recognition(CLI::App& app) {
  auto cmd = app.add_subcommand("eval-recognition", "Run the recognition protocol");
  struct Opts {
    std::string features, report, loss_name = "logistic";
    size_t train_per_class = 30, splits = 5;
    uint64_t seed = 0;
    TrainConfig train;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--features", opts->features, "Feature CSV")->required();
  cmd->add_option("--train-per-class", opts->train_per_class, "Training samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--splits", opts->splits, "Number of splits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "Protocol seed")->capture_default_str();
  cmd->add_option("--report", opts->report, "Write report CSV here");
  add_train_flags(cmd, opts->train, opts->loss_name);

  cmd->callback([opts] {
    opts->train.loss = opts->loss_name == "hinge" ? PairwiseLoss::hinge : PairwiseLoss::logistic;
    FeatureTable table = FeatureTable::parse(require_file(opts->features));
    EvalReport report = run_recognition_protocol(table, opts->train_per_class, opts->splits,
                                                 opts->seed, opts->train);
    maybe_write_report(report, opts->report);
    emit(report_to_json(report), report.protocol + ": mean accuracy " +
                                     format_double(report.mean) + " +/- " +
                                     format_double(report.stddev) + " over " +
                                     std::to_string(opts->splits) + " splits");
  });
}

void setup_eval_da(CLI::App& app) {
  auto cmd = app.add_subcommand("eval-da", "Run the domain-adaptation protocol");
  struct Opts {
    std::string source, target, mode, report, loss_name = "logistic";
    size_t source_labels = 20, target_labels = 3, splits = 5;
    uint64_t seed = 0;
    TrainConfig train;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--source", opts->source, "Source-domain feature CSV")->required();
  cmd->add_option("--target", opts->target, "Target-domain feature CSV")->required();
  cmd->add_option("--mode", opts->mode, "S, T, or ST")
      ->required()
      ->check(CLI::IsMember({"S", "T", "ST", "s", "t", "st"}));
  cmd->add_option("--source-labels", opts->source_labels, "Labeled source samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--target-labels", opts->target_labels, "Labeled target samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--splits", opts->splits, "Number of splits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "Protocol seed")->capture_default_str();
  cmd->add_option("--report", opts->report, "Write report CSV here");
  add_train_flags(cmd, opts->train, opts->loss_name);

  cmd->callback([opts] {
    opts->train.loss = opts->loss_name == "hinge" ? PairwiseLoss::hinge : PairwiseLoss::logistic;
    FeatureTable source = FeatureTable::parse(require_file(opts->source));
    FeatureTable target = FeatureTable::parse(require_file(opts->target));
    DaResult result = run_da_protocol(source, target, da_mode_from_string(opts->mode),
                                      opts->source_labels, opts->target_labels, opts->splits,
                                      opts->seed, opts->train);
    maybe_write_report(result.report, opts->report);

    json j = report_to_json(result.report);
    json splits = json::array();
    for (const auto& d : result.details)
      splits.push_back({{"train_size", d.train_size}, {"test_size", d.test_size}});
    j["splits"] = splits;
    emit(j, result.report.protocol + ": mean accuracy " + format_double(result.report.mean) +
                " +/- " + format_double(result.report.stddev) + " over " +
                std::to_string(opts->splits) + " splits");
  });
}

void setup_embed(CLI::App& app) {
  auto cmd = app.add_subcommand("embed", "PCA + t-SNE embedding with scatter output");
  struct Opts {
    std::string features, superclasses, out;
    size_t pca_dim = 50;
    TsneConfig tsne;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--features", opts->features, "Feature CSV")->required();
  cmd->add_option("--superclasses", opts->superclasses, "Super-class TSV for colouring");
  cmd->add_option("--out", opts->out, "Output directory")->required();
  cmd->add_option("--pca-dim", opts->pca_dim, "PCA dimensions before t-SNE (0 = skip)")
      ->capture_default_str();
  cmd->add_option("--perplexity", opts->tsne.perplexity, "t-SNE perplexity")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--iterations", opts->tsne.iterations, "t-SNE iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--learning-rate", opts->tsne.learning_rate, "t-SNE learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", opts->tsne.seed, "Embedding seed")->capture_default_str();

  cmd->callback([opts] {
    FeatureTable table = FeatureTable::parse(require_file(opts->features));
    Matrix X = table.matrix();
    size_t pca_dim = 0;
    if (opts->pca_dim > 0 && opts->pca_dim < std::min(X.rows(), X.cols())) {
      pca_dim = opts->pca_dim;
      X = pca_fit_transform(X, pca_dim).projection;
    }
    EmbeddingResult embedding = tsne_embed(X, opts->tsne);

    SuperClassMap map;
    if (!opts->superclasses.empty()) map = SuperClassMap::parse(require_file(opts->superclasses));
    std::vector<std::string> labels;
    labels.reserve(table.rows.size());
    for (const auto& row : table.rows) labels.push_back(row.label);
    ScatterFiles files = write_scatter(embedding.y, labels, map, opts->out);

    json result;
    result["points"] = table.rows.size();
    result["pca_dim"] = pca_dim;
    result["kl_initial"] = embedding.kl_trace.front();
    result["kl_final"] = embedding.kl_trace.back();
    result["unmapped_points"] = files.unmapped_points;
    result["files"] = {(fs::path(opts->out) / "scatter.csv").string(),
                       (fs::path(opts->out) / "scatter.svg").string()};
    emit(result, "embedded " + std::to_string(table.rows.size()) + " points; KL " +
                     format_double(embedding.kl_trace.front()) + " -> " +
                     format_double(embedding.kl_trace.back()));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"webly image corpus toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with key=value lines mirroring flags");
  app.add_flag("--json", g_json, "Emit structured JSON results on stdout");
  app.fallthrough();

  setup_expand(app);
  setup_harvest(app);
  setup_download(app);
  setup_dedup(app);
  setup_split(app);
  setup_stats(app);
  setup_train_shallow(app);
  setup_eval_recognition(app);
  setup_eval_da(app);
  setup_embed(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
