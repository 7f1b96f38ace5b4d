#ifndef COMPOUND_KGE_TOOLS_CLI_COMMANDS_HPP
#define COMPOUND_KGE_TOOLS_CLI_COMMANDS_HPP

// Subcommands of the compound_kge tool. Each takes its arguments (without the
// program and subcommand names) and returns the process exit code, so tests
// can drive them in-process.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "compound_kge.hpp"

namespace compound_kge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

/// Parses `args` into `app`; returns an exit code when parsing ends the command.
inline std::optional<int> parse(CLI::App& app, std::vector<std::string> args, std::ostream& out,
                                std::ostream& err) {
  std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }
  return std::nullopt;
}

inline int usage(std::ostream& err, const std::string& cmd, const std::string& what) {
  err << cmd << ": " << what << "\n";
  return kExitUsage;
}

inline int failure(std::ostream& err, const std::string& cmd, const std::string& what) {
  err << cmd << ": error: " << what << "\n";
  return kExitFailure;
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

inline std::string format_residual(const Residual& r) {
  if (!r.applicable()) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r.value);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_train(const std::vector<std::string>& args, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  CLI::App app{"Train a compound-operator embedding model", "compound_kge train"};
  std::optional<std::string> config_path, data, variant, head_order, tail_order, preset, norm, save,
      optimizer, init;
  std::optional<std::size_t> dim, batch, neg, steps, valid_interval, valid_max, threads;
  std::optional<double> lr, alpha, margin;
  std::optional<std::uint64_t> seed;
  bool deterministic = false, separate_rotation = false;
  app.add_option("--config", config_path, "JSON run config; explicit flags override it");
  app.add_option("--data", data, "dataset directory (train.txt, valid.txt, test.txt)");
  app.add_option("--variant", variant, "head | tail | full");
  app.add_option("--head-order", head_order, "head operator product over {T,R,S}, e.g. SRT");
  app.add_option("--tail-order", tail_order, "tail operator product over {T,R,S}");
  app.add_option("--preset", preset, "transe | rotate | pairre | linearre");
  app.add_option("--dim", dim, "embedding dimension");
  app.add_option("--lr", lr, "learning rate");
  app.add_option("--batch-size", batch, "positives per step");
  app.add_option("--neg-size", neg, "negatives per positive");
  app.add_option("--alpha", alpha, "self-adversarial temperature");
  app.add_option("--margin", margin, "margin zeta");
  app.add_option("--steps", steps, "training steps");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--norm", norm, "l1 | l2");
  app.add_option("--save", save, "output directory");
  app.add_option("--optimizer", optimizer, "adam | sgd");
  app.add_option("--valid-interval", valid_interval, "steps between validation runs");
  app.add_option("--valid-max", valid_max, "cap on validation triples (0: all)");
  app.add_option("--init", init, "random | identity relation initialization");
  app.add_option("--threads", threads, "worker threads (0: automatic)");
  app.add_flag("--separate-rotation", separate_rotation, "independent head and tail angles");
  app.add_flag("--deterministic", deterministic, "single-threaded, bit-reproducible run");
  if (auto code = detail::parse(app, args, out, err)) return *code;

  const std::string cmd = "compound_kge train";
  RunConfig cfg;
  try {
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) return detail::usage(err, cmd, "cannot open config " + *config_path);
      cfg = run_config_from_json(nlohmann::json::parse(in));
    }
  } catch (const nlohmann::json::exception& e) {
    return detail::usage(err, cmd, std::string("config is not valid JSON: ") + e.what());
  } catch (const config_error& e) {
    return detail::usage(err, cmd, e.what());
  }
  if (data) cfg.data = *data;
  if (variant) cfg.variant = variant;
  if (head_order) cfg.head_order = head_order;
  if (tail_order) cfg.tail_order = tail_order;
  if (preset) cfg.preset = preset;
  if (dim) cfg.dim = *dim;
  if (norm) cfg.norm = *norm;
  if (separate_rotation) cfg.shared_rotation = false;
  if (lr) cfg.train.learning_rate = *lr;
  if (batch) cfg.train.batch_size = *batch;
  if (neg) cfg.train.negative_size = *neg;
  if (alpha) cfg.train.adversarial_temperature = *alpha;
  if (margin) cfg.train.margin = *margin;
  if (steps) cfg.train.max_steps = *steps;
  if (seed) cfg.train.seed = *seed;
  if (valid_interval) cfg.train.valid_interval = *valid_interval;
  if (valid_max) cfg.train.valid_max_triples = *valid_max;
  if (threads) cfg.train.threads = *threads;
  if (save) cfg.save_dir = *save;
  if (deterministic) cfg.deterministic = true;
  if (cfg.data.empty()) return detail::usage(err, cmd, "--data is required");

  PresetModel model_spec;
  TrainConfig tc;
  try {
    if (optimizer) cfg.train.optimizer = parse_optimizer(*optimizer);
    if (init) cfg.train.init = parse_init(*init);
    model_spec = cfg.resolve();
    tc = cfg.effective_train();
    tc.validate();
  } catch (const std::invalid_argument& e) {
    return detail::usage(err, cmd, e.what());
  }

  const auto resolved = to_json(cfg);
  out << "run config: " << resolved.dump() << "\n";
  out << "model: " << to_string(model_spec.preset) << " " << model_spec.spec.describe() << "\n";
  try {
    const std::filesystem::path dir(cfg.save_dir);
    std::filesystem::create_directories(dir);
    {
      std::ofstream f(dir / "run_config.json");
      f << resolved.dump(2) << "\n";
    }
    const TripleStore store = load_dataset(cfg.data);
    const FilterIndex filter(store);
    std::ofstream log(dir / "train_log.csv");
    TrainOptions opts;
    opts.filter = &filter;
    opts.log_csv = &log;
    opts.on_row = [&](const TrainLogRow& row) {
      if (row.valid_mrr) out << "step " << row.step << " loss " << row.loss << " valid_mrr " << *row.valid_mrr << "\n";
    };
    const TrainResult result = train(store, model_spec, tc, opts);
    save_checkpoint(dir / "last.ckpt", make_checkpoint(result.model, store, result.steps, result.rng, resolved));
    save_checkpoint(dir / "best.ckpt", make_checkpoint(result.best, store, result.best_step, result.rng, resolved));
    out << "saved " << (dir / "last.ckpt").string() << " and " << (dir / "best.ckpt").string()
        << " (best step " << result.best_step << ")\n";
    if (!store.valid.empty()) {
      const auto cats = categorize_relations(store, cfg.eta);
      EvalOptions eo;
      eo.threads = tc.threads ? tc.threads : default_thread_count();
      out << format_report(evaluate(result.model, store, Split::Valid, filter, cats, eo));
    }
  } catch (const std::exception& e) {
    return detail::failure(err, cmd, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int cmd_eval(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Filtered link-prediction evaluation", "compound_kge eval"};
  std::string checkpoint, data, split = "test", out_path;
  double eta = kDefaultEta;
  std::size_t threads = 0;
  app.add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  app.add_option("--data", data, "dataset directory")->required();
  app.add_option("--split", split, "valid | test")->check(CLI::IsMember({"valid", "test"}));
  app.add_option("--eta", eta, "categorization threshold");
  app.add_option("--out", out_path, "write the JSON report here");
  app.add_option("--threads", threads, "worker threads (0: automatic)");
  if (auto code = detail::parse(app, args, out, err)) return *code;

  const std::string cmd = "compound_kge eval";
  if (!(eta >= 0.0)) return detail::usage(err, cmd, "--eta must be non-negative");
  try {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const TripleStore store = load_dataset(data);
    const std::string hash = store.dictionary_hash();
    if (ck.dataset_hash != hash) {
      err << cmd << ": refusing to evaluate: checkpoint dataset hash " << ck.dataset_hash
          << " does not match dataset hash " << hash << "\n";
      return kExitFailure;
    }
    const FilterIndex filter(store);
    const auto cats = categorize_relations(store, eta);
    EvalOptions eo;
    eo.threads = threads ? threads : default_thread_count();
    const auto report = evaluate(ck.model, store, split == "valid" ? Split::Valid : Split::Test,
                                 filter, cats, eo);
    out << format_report(report);
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) return detail::failure(err, cmd, "cannot write " + out_path);
      f << to_json(report).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    return detail::failure(err, cmd, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int cmd_categorize(const std::vector<std::string>& args, std::ostream& out = std::cout,
                          std::ostream& err = std::cerr) {
  CLI::App app{"Relation categories from head/tail fan-out", "compound_kge categorize"};
  std::string data;
  double eta = kDefaultEta;
  app.add_option("--data", data, "dataset directory")->required();
  app.add_option("--eta", eta, "threshold on hpt / tph");
  if (auto code = detail::parse(app, args, out, err)) return *code;

  const std::string cmd = "compound_kge categorize";
  if (!(eta >= 0.0)) return detail::usage(err, cmd, "--eta must be non-negative");
  try {
    const TripleStore store = load_dataset(data);
    const auto stats = categorize_relations(store, eta);
    char line[512];
    std::snprintf(line, sizeof line, "%-40s %10s %10s %-8s %12s\n", "relation", "hpt", "tph",
                  "category", "train_triples");
    out << line;
    for (std::size_t r = 0; r < stats.size(); ++r) {
      const auto& s = stats[r];
      std::snprintf(line, sizeof line, "%-40s %10.4f %10.4f %-8s %12zu%s\n",
                    store.relations.name(static_cast<std::int32_t>(r)).c_str(), s.hpt, s.tph,
                    to_string(s.category).c_str(), s.train_triples,
                    s.absent ? "  (absent from train)" : "");
      out << line;
    }
    std::snprintf(line, sizeof line, "complex-relation triple fraction (eta=%g): %.6f\n", eta,
                  complex_triple_fraction(store, stats));
    out << line;
  } catch (const std::exception& e) {
    return detail::failure(err, cmd, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int cmd_diagnose(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Relation-pattern diagnostics and exports", "compound_kge diagnose"};
  std::string checkpoint, hist_dir, emb_file, labels_file, inverse, compose, commute;
  std::vector<std::string> relations;
  bool all = false;
  std::size_t bins = 50;
  double scale_tol = kTrainedSingularTolerance;
  app.add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* rel_opt = app.add_option("--relation", relations, "relation name (repeatable)");
  auto* all_opt = app.add_flag("--all", all, "every relation");
  rel_opt->excludes(all_opt);
  app.add_option("--export-histograms", hist_dir, "write <relation>.csv histograms here");
  app.add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);
  app.add_option("--export-embeddings", emb_file, "write entity embeddings CSV");
  app.add_option("--labels", labels_file, "name<TAB>label file joined into the embeddings CSV");
  app.add_option("--scale-tol", scale_tol, "|s| below this counts as singular");
  app.add_option("--inverse", inverse, "R1,R2: inversion residual");
  app.add_option("--compose", compose, "R1,R2,R3: composition residual");
  app.add_option("--commute", commute, "R1,R2: commutator residual");
  if (auto code = detail::parse(app, args, out, err)) return *code;

  const std::string cmd = "compound_kge diagnose";
  try {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const Model& model = ck.model;
    const auto& names = ck.relation_names;

    std::vector<std::int32_t> ids;
    if (all)
      for (std::size_t r = 0; r < model.relation_count(); ++r) ids.push_back(static_cast<std::int32_t>(r));
    for (const auto& n : relations) ids.push_back(find_relation(names, n));

    auto ids_of = [&](const std::string& list, std::size_t want, const char* flag) {
      const auto parts = detail::split_commas(list);
      if (parts.size() != want)
        throw config_error(std::string(flag) + " expects " + std::to_string(want) + " comma-separated relations");
      std::vector<BlockMatrices> out_blocks;
      for (const auto& p : parts)
        out_blocks.push_back(relation_matrices(model.relations.at(static_cast<std::size_t>(find_relation(names, p))), model.spec));
      return out_blocks;
    };
    std::vector<std::pair<std::string, Residual>> pair_rows;
    if (!inverse.empty()) {
      auto b = ids_of(inverse, 2, "--inverse");
      pair_rows.emplace_back("inversion(" + inverse + ")", inversion_residual(b[0], b[1]));
    }
    if (!compose.empty()) {
      auto b = ids_of(compose, 3, "--compose");
      pair_rows.emplace_back("composition(" + compose + ")", composition_residual(b[0], b[1], b[2]));
    }
    if (!commute.empty()) {
      auto b = ids_of(commute, 2, "--commute");
      pair_rows.emplace_back("commutator(" + commute + ")", commutator_residual(b[0], b[1]));
    }
    if (ids.empty() && pair_rows.empty() && emb_file.empty())
      return detail::usage(err, cmd, "give --relation NAME, --all, a residual query or --export-embeddings");

    char line[512];
    if (!ids.empty()) {
      std::snprintf(line, sizeof line, "%-40s %12s %14s %12s %9s\n", "relation", "singular_frac",
                    "block_det_min", "symmetry", "excluded");
      out << line;
    }
    for (auto id : ids) {
      const auto d = diagnose_relation(model, id, scale_tol);
      const std::string name = names.empty() ? std::to_string(id) : names[static_cast<std::size_t>(id)];
      std::snprintf(line, sizeof line, "%-40s %12.4f %14.4e %12s %9zu\n", name.c_str(),
                    d.singularity_fraction, d.block_det_min,
                    detail::format_residual(d.symmetry).c_str(), d.symmetry.excluded);
      out << line;
      if (!hist_dir.empty()) {
        std::filesystem::create_directories(hist_dir);
        std::string file = name;
        std::replace_if(file.begin(), file.end(), [](char c) { return c == '/' || c == '\\' || c == ' '; }, '_');
        std::ofstream f(std::filesystem::path(hist_dir) / (file + ".csv"));
        write_histogram_csv(f, relation_histograms(model, id, bins));
      }
    }
    for (const auto& [label, r] : pair_rows)
      out << label << ": " << detail::format_residual(r) << " (" << r.evaluated << " blocks, "
          << r.excluded << " excluded)\n";

    if (!emb_file.empty()) {
      std::map<std::string, std::string> labels;
      if (!labels_file.empty()) labels = read_label_file(labels_file);
      std::ofstream f(emb_file);
      if (!f) return detail::failure(err, cmd, "cannot write " + emb_file);
      const auto rep = write_entity_embeddings(f, model, ck.entity_names,
                                               labels_file.empty() ? nullptr : &labels);
      if (!labels_file.empty() && (rep.unlabeled || rep.unknown_labels))
        err << cmd << ": warning: " << rep.unlabeled << " entities without a label, "
            << rep.unknown_labels << " labels naming unknown entities\n";
    }
  } catch (const config_error& e) {
    return detail::usage(err, cmd, e.what());
  } catch (const std::exception& e) {
    return detail::failure(err, cmd, e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  static const char* usage_text =
      "usage: compound_kge <train|eval|categorize|diagnose> [flags]\n"
      "       compound_kge <command> --help\n";
  if (argc < 2) {
    err << usage_text;
    return kExitUsage;
  }
  const std::string sub = argv[1];
  const std::vector<std::string> rest(argv + 2, argv + argc);
  if (sub == "train") return cmd_train(rest, out, err);
  if (sub == "eval") return cmd_eval(rest, out, err);
  if (sub == "categorize") return cmd_categorize(rest, out, err);
  if (sub == "diagnose") return cmd_diagnose(rest, out, err);
  if (sub == "--help" || sub == "-h") {
    out << usage_text;
    return kExitOk;
  }
  err << "unknown command '" << sub << "'\n" << usage_text;
  return kExitUsage;
}

}  // namespace compound_kge::cli

#endif  // COMPOUND_KGE_TOOLS_CLI_COMMANDS_HPP
