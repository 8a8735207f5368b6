#pragma once

#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/feature_select.hpp"
#include "mckelm/metrics.hpp"
#include "mckelm/model_io.hpp"
#include "mckelm/partition.hpp"
#include "mckelm/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mckelm::cli {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Query input: labeled or unlabeled rows of the model's input dimension.

struct QueryData {
  FeatureMatrix features;
  std::optional<std::vector<std::int64_t>> labels;  // raw file labels
};

inline QueryData load_queries(const fs::path& path, bool header, std::size_t input_dimension) {
  QueryData q;
  const auto ext = path.extension().string();
  if (ext == ".bin" || ext == ".mckd") {
    BinaryTable t = read_binary_table(path, kDatasetMagic);
    q.features = std::move(t.features);
    q.labels = std::vector<std::int64_t>(t.labels.begin(), t.labels.end());
  } else {
    CsvTable t = read_csv_table(path, header, input_dimension);
    q.features = std::move(t.features);
    if (t.has_labels) q.labels = std::move(t.labels);
  }
  if (!q.features.allFinite()) throw Error(ErrorKind::domain, "'" + path.string() + "' contains NaN or infinite values");
  return q;
}

// ---------------------------------------------------------------------------
// Options shared by several commands.

struct TrainFlags {
  std::string classifier = "mckelm";
  std::string kernel = "rbf";
  double gamma = 1.0;
  double sigma = 1.0;
  double reg_c = 1e-3;
  std::size_t eta = 2;
  std::size_t route_k = 3;
  std::string vote_mode = "majority";
  std::size_t hidden = 0;
  std::size_t knn_k = 1;
  bool clamp = false;
  std::string features;  // selection file

  TrainOptions to_options(std::uint64_t seed, std::size_t threads) const {
    TrainOptions o;
    o.classifier = parse_model_kind(classifier);
    o.kernel.kind = kernel == "chi2" ? KernelKind::chi_square : KernelKind::rbf;
    o.kernel.gamma = gamma;
    o.kernel.sigma = sigma;
    o.reg_c = reg_c;
    o.eta = eta;
    o.route_k = route_k;
    o.vote_mode = vote_mode == "score" ? VoteMode::score_average : VoteMode::majority;
    o.hidden = hidden;
    o.knn_k = knn_k;
    o.seed = seed;
    o.clamp = clamp;
    o.threads = threads;
    o.validate();
    return o;
  }
};

inline void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--classifier", f.classifier, "mckelm|kelm|elm|rkelm|knn|gnb")
      ->check(CLI::IsMember({"mckelm", "kelm", "elm", "rkelm", "knn", "gnb"}))
      ->capture_default_str();
  cmd->add_option("--kernel", f.kernel, "rbf|chi2")->check(CLI::IsMember({"rbf", "chi2"}))->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "RBF width")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "chi-square scale")->capture_default_str();
  cmd->add_option("--reg-c", f.reg_c, "ridge strength C in (C I + K)")->capture_default_str();
  cmd->add_option("--eta", f.eta, "chopping rounds, 2^eta subsets")->capture_default_str();
  cmd->add_option("--route-k", f.route_k, "nearest training rows used for routing")->capture_default_str();
  cmd->add_option("--vote-mode", f.vote_mode, "majority|score")
      ->check(CLI::IsMember({"majority", "score"}))
      ->capture_default_str();
  cmd->add_option("--hidden", f.hidden, "ELM hidden neurons (0 = min(1024, max(64, n/10)))")->capture_default_str();
  cmd->add_option("--knn-k", f.knn_k, "neighbors for the k-NN classifier")->capture_default_str();
  cmd->add_flag("--clamp", f.clamp, "clip normalized features to [0,1] (always on for chi2)");
  cmd->add_option("--features", f.features, "feature selection file from select-features");
}

struct CommonFlags {
  std::uint64_t seed = 0;
  std::size_t threads = default_thread_count();
  bool header = false;

  void validate() const {
    if (threads < 1) throw Error(ErrorKind::validation, "--threads must be at least 1");
  }
};

inline void add_common_flags(CLI::App* cmd, CommonFlags& c) {
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads")->capture_default_str();
  cmd->add_flag("--header", c.header, "CSV inputs start with a header line");
  cmd->add_option("--config", "flat key=value file; flags override its values");
}

// Expands `--config FILE` into `--key=value` arguments placed before the
// explicit ones. Keys also given as flags are skipped so flags win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");

  std::vector<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.push_back(a.substr(2, a.find('=') == std::string::npos ? a.npos : a.find('=') - 2));

  std::vector<std::string> injected;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::parse, "'" + path + "' line " + std::to_string(no) + ": expected key=value");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty() || key == "config")
      throw Error(ErrorKind::parse, "'" + path + "' line " + std::to_string(no) + ": invalid key");
    if (std::find(given.begin(), given.end(), key) != given.end()) continue;
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

inline void require_readable(const std::string& path, const char* flag) {
  if (path.empty()) throw Error(ErrorKind::validation, std::string(flag) + " is required");
  if (!fs::exists(path)) throw Error(ErrorKind::io, std::string(flag) + ": '" + path + "' does not exist");
}

inline void require_output(const std::string& path, const char* flag) {
  if (path.empty()) throw Error(ErrorKind::validation, std::string(flag) + " is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw Error(ErrorKind::io, std::string(flag) + ": directory '" + parent.string() + "' does not exist");
}

inline std::optional<FeatureSelection> load_optional_selection(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_selection(path);
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline std::string flat_report(const EvalReport& r, const LabelMap& labels) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "model=" << r.model << '\n'
     << "samples=" << r.samples << '\n'
     << "classes=" << r.confusion.class_count << '\n'
     << "accuracy=" << r.accuracy << '\n'
     << "precision=" << r.macro.precision.value << '\n'
     << "recall=" << r.macro.recall.value << '\n'
     << "f1=" << r.macro.f1.value << '\n'
     << "partial=" << (r.macro.partial ? 1 : 0) << '\n'
     << "train_seconds=" << r.train_seconds << '\n'
     << "test_seconds=" << r.test_seconds << '\n';
  for (std::size_t k = 0; k < r.macro.per_class.size(); ++k) {
    const auto& m = r.macro.per_class[k];
    const std::string p = "class." + std::to_string(labels.decode(static_cast<Label>(k))) + ".";
    os << p << "precision=" << m.precision.value << '\n'
       << p << "precision_degenerate=" << (m.precision.degenerate ? 1 : 0) << '\n'
       << p << "recall=" << m.recall.value << '\n'
       << p << "recall_degenerate=" << (m.recall.degenerate ? 1 : 0) << '\n'
       << p << "f1=" << m.f1.value << '\n'
       << p << "f1_degenerate=" << (m.f1.degenerate ? 1 : 0) << '\n';
  }
  for (std::size_t t = 0; t < r.confusion.class_count; ++t) {
    os << "confusion." << t << '=';
    for (std::size_t p = 0; p < r.confusion.class_count; ++p) os << (p ? "," : "") << r.confusion.at(t, p);
    os << '\n';
  }
  return os.str();
}

inline std::string json_report(const EvalReport& r, const LabelMap& labels) {
  auto metric = [](const Metric& m) {
    nlohmann::ordered_json j;
    j["value"] = m.value;
    j["degenerate"] = m.degenerate;
    return j;
  };
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["samples"] = r.samples;
  j["classes"] = r.confusion.class_count;
  j["accuracy"] = r.accuracy;
  j["precision"] = metric(r.macro.precision);
  j["recall"] = metric(r.macro.recall);
  j["f1"] = metric(r.macro.f1);
  j["partial"] = r.macro.partial;
  j["train_seconds"] = r.train_seconds;
  j["test_seconds"] = r.test_seconds;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < r.macro.per_class.size(); ++k) {
    nlohmann::ordered_json c;
    c["label"] = labels.decode(static_cast<Label>(k));
    c["precision"] = metric(r.macro.per_class[k].precision);
    c["recall"] = metric(r.macro.per_class[k].recall);
    c["f1"] = metric(r.macro.per_class[k].f1);
    per.push_back(std::move(c));
  }
  j["per_class"] = std::move(per);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < r.confusion.class_count; ++t) {
    std::vector<std::uint64_t> row;
    for (std::size_t p = 0; p < r.confusion.class_count; ++p) row.push_back(r.confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = std::move(rows);
  return j.dump(1) + "\n";
}

inline fs::path train_sidecar(const fs::path& model) { return fs::path(model.string() + ".train.json"); }

// ---------------------------------------------------------------------------
// Commands

struct PartitionArgs {
  CommonFlags common;
  std::string train, out, features;
  std::size_t eta = 2;
};

inline int cmd_partition(const PartitionArgs& a, std::ostream& out) {
  a.common.validate();
  PartitionConfig cfg{a.eta, a.common.threads};
  cfg.validate();
  require_readable(a.train, "--train");
  if (!a.out.empty()) require_output(a.out, "--out");
  const auto selection = load_optional_selection(a.features);

  LoadedDataset loaded = load_dataset(a.train, a.common.header);
  Dataset data{select_features(selection, loaded.data.features), loaded.data.labels, loaded.data.class_count};
  data.features = apply_normalizer(fit_normalizer(data), data.features, false);
  const PartitionTree tree = build_partition(data, cfg);

  out << std::setprecision(10);
  out << "rows=" << tree.row_count << " features=" << tree.feature_count << " eta=" << tree.eta
      << " subsets=" << tree.leaf_count() << " root_density=" << tree.root_density << '\n';
  for (std::size_t i = 0; i < tree.internal_count(); ++i) {
    const auto& nd = tree.nodes[i];
    out << "split node=" << i << " size=" << nd.size << " feature=" << nd.split_feature << " value=" << nd.split_value
        << " chopped_density=" << nd.chopped_density << " deviation=" << nd.deviation << '\n';
  }
  for (std::size_t s = 0; s < tree.leaf_count(); ++s) out << "leaf subset=" << s << " size=" << tree.leaf(s).size << '\n';

  if (!a.out.empty()) {
    nlohmann::ordered_json j;
    j["rows"] = tree.row_count;
    j["features"] = tree.feature_count;
    j["eta"] = tree.eta;
    j["root_density"] = tree.root_density;
    nlohmann::ordered_json splits = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < tree.internal_count(); ++i) {
      const auto& nd = tree.nodes[i];
      splits.push_back({{"node", i}, {"size", nd.size}, {"feature", nd.split_feature}, {"value", nd.split_value},
                        {"chopped_density", nd.chopped_density}, {"deviation", nd.deviation}});
    }
    j["splits"] = std::move(splits);
    nlohmann::ordered_json leaves = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < tree.leaf_count(); ++s)
      leaves.push_back({{"subset", s}, {"size", tree.leaf(s).size}, {"members", tree.leaf(s).members}});
    j["leaves"] = std::move(leaves);
    io::write_file_atomic(a.out, j.dump(1) + "\n");
  }
  return 0;
}

struct TrainArgs {
  CommonFlags common;
  TrainFlags train_flags;
  std::string train, model;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out) {
  a.common.validate();
  TrainOptions opt = a.train_flags.to_options(a.common.seed, a.common.threads);
  require_readable(a.train, "--train");
  require_output(a.model, "--model");
  opt.selection = load_optional_selection(a.train_flags.features);

  const LoadedDataset loaded = load_dataset(a.train, a.common.header);
  const auto start = Clock::now();
  const ModelFile f = train_model(loaded.data, loaded.label_map, opt);
  const double train_seconds = seconds_since(start);

  nlohmann::ordered_json side;
  side["classifier"] = to_string(opt.classifier);
  side["rows"] = loaded.data.size();
  side["input_features"] = loaded.data.feature_count();
  side["model_features"] = opt.selection ? opt.selection->selected.size() : loaded.data.feature_count();
  side["classes"] = loaded.data.class_count;
  side["train_seconds"] = train_seconds;
  save_model(f, a.model);
  io::write_file_atomic(train_sidecar(a.model), side.dump(1) + "\n");

  out << "trained " << to_string(opt.classifier) << " on " << loaded.data.size() << " rows in "
      << format_real(train_seconds) << " s -> " << a.model << '\n';
  return 0;
}

struct PredictArgs {
  CommonFlags common;
  std::string model, test, out;
  bool votes = false;
};

inline int cmd_predict(const PredictArgs& a, std::ostream& out) {
  a.common.validate();
  require_readable(a.model, "--model");
  require_readable(a.test, "--test");
  require_output(a.out, "--out");
  const ModelFile f = load_model(a.model);
  if (a.votes && f.kind != ModelKind::mckelm)
    throw Error(ErrorKind::validation, "--votes needs an mckelm model, got " + std::string(to_string(f.kind)));
  const QueryData q = load_queries(a.test, a.common.header, f.input_dimension());

  const auto start = Clock::now();
  const ModelPrediction p = predict_model(f, q.features, a.common.threads);
  const double test_seconds = seconds_since(start);

  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "row,label" << (a.votes ? ",votes" : "") << '\n';
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    os << i << ',' << f.labels.decode(p.labels[i]);
    if (a.votes) {
      os << ',';
      const auto& v = p.reports[i].votes;
      for (std::size_t j = 0; j < v.size(); ++j)
        os << (j ? ";" : "") << v[j].subset_id << ':' << f.labels.decode(v[j].label) << ':' << v[j].distance;
    }
    os << '\n';
  }
  io::write_file_atomic(a.out, os.str());
  out << "predicted " << p.labels.size() << " rows in " << format_real(test_seconds) << " s -> " << a.out << '\n';
  return 0;
}

struct EvaluateArgs {
  CommonFlags common;
  TrainFlags train_flags;
  std::string model, train, test, out, json;
};

// Scores a saved model (--model) or trains one in-process first (--train).
inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  a.common.validate();
  if (a.model.empty() == a.train.empty()) throw Error(ErrorKind::validation, "give exactly one of --model or --train");
  std::optional<TrainOptions> opt;
  if (!a.train.empty()) {
    opt = a.train_flags.to_options(a.common.seed, a.common.threads);
    require_readable(a.train, "--train");
  } else {
    require_readable(a.model, "--model");
  }
  require_readable(a.test, "--test");
  if (!a.out.empty()) require_output(a.out, "--out");
  if (!a.json.empty()) require_output(a.json, "--json");

  ModelFile f;
  double train_seconds = 0.0;
  if (opt) {
    opt->selection = load_optional_selection(a.train_flags.features);
    const LoadedDataset loaded = load_dataset(a.train, a.common.header);
    const auto start = Clock::now();
    f = train_model(loaded.data, loaded.label_map, *opt);
    train_seconds = seconds_since(start);
  } else {
    f = load_model(a.model);
    const fs::path side = train_sidecar(a.model);
    if (fs::exists(side)) {
      const auto bytes = io::read_file(side);
      try {
        train_seconds = nlohmann::json::parse(bytes.begin(), bytes.end()).at("train_seconds").get<double>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, "'" + side.string() + "': " + e.what());
      }
    }
  }

  const QueryData q = load_queries(a.test, a.common.header, f.input_dimension());
  if (!q.labels) throw Error(ErrorKind::validation, "--test must carry a label column for evaluation");
  const LabelVector truth = f.labels.encode(*q.labels);

  const auto start = Clock::now();
  const ModelPrediction p = predict_model(f, q.features, a.common.threads);
  const double test_seconds = seconds_since(start);

  EvalReport r = evaluate(truth, p.labels, f.labels.size());
  r.model = to_string(f.kind);
  r.train_seconds = train_seconds;
  r.test_seconds = test_seconds;
  const std::string flat = flat_report(r, f.labels);
  if (!a.out.empty()) io::write_file_atomic(a.out, flat);
  if (!a.json.empty()) io::write_file_atomic(a.json, json_report(r, f.labels));
  out << flat;
  return 0;
}

struct SelectArgs {
  CommonFlags common;
  std::string attributions, out;
  std::size_t top_m = 500;
  bool absolute = false;
};

inline int cmd_select_features(const SelectArgs& a, std::ostream& out) {
  a.common.validate();
  if (a.top_m < 1) throw Error(ErrorKind::validation, "--top-m must be at least 1");
  require_readable(a.attributions, "--attributions");
  require_output(a.out, "--out");
  std::size_t c = 0;
  const AttributionTensor t = load_attributions(a.attributions, &c, a.common.header);
  const FeatureSelection sel = top_m(overall_scores(t, c), a.top_m, a.absolute);
  save_selection(sel, a.out);
  out << "selected " << sel.selected.size() << " of " << sel.input_dimension() << " features from " << t.size()
      << " attribution rows (" << c << " classes) -> " << a.out << '\n';
  return 0;
}

struct BenchArgs {
  CommonFlags common;
  TrainFlags train_flags;
  std::string train, out, shape = "blobs";
  std::vector<std::size_t> etas{0, 1, 2, 3};
  std::size_t repeats = 3;
  std::size_t n = 4000, d = 2, classes = 2;
  double test_fraction = 0.25;
};

struct BenchRow {
  std::size_t eta = 0;
  std::size_t subsets = 1;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
  double accuracy = 0.0;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Median-of-repeats train/test time and accuracy for every eta.
inline std::vector<BenchRow> run_bench(const Split& split, const LabelMap& labels, TrainOptions opt,
                                       const std::vector<std::size_t>& etas, std::size_t repeats) {
  std::vector<BenchRow> rows;
  for (std::size_t eta : etas) {
    opt.eta = eta;
    std::vector<double> train_t, test_t, acc;
    for (std::size_t r = 0; r < repeats; ++r) {
      auto start = Clock::now();
      const ModelFile f = train_model(split.train, labels, opt);
      train_t.push_back(seconds_since(start));
      start = Clock::now();
      const ModelPrediction p = predict_model(f, split.test.features, opt.threads);
      test_t.push_back(seconds_since(start));
      acc.push_back(accuracy(confusion(split.test.labels, p.labels, split.test.class_count)));
    }
    rows.push_back({eta, std::size_t{1} << eta, median(train_t), median(test_t), median(acc)});
  }
  return rows;
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
  a.common.validate();
  TrainOptions opt = a.train_flags.to_options(a.common.seed, a.common.threads);
  if (a.etas.empty()) throw Error(ErrorKind::validation, "--etas needs at least one value");
  for (auto e : a.etas)
    if (e > kMaxEta) throw Error(ErrorKind::validation, "--etas value " + std::to_string(e) + " is too large");
  if (a.repeats < 1) throw Error(ErrorKind::validation, "--repeats must be at least 1");
  if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0))
    throw Error(ErrorKind::validation, "--test-fraction must lie in (0, 1)");
  if (!a.train.empty()) require_readable(a.train, "--train");
  if (!a.out.empty()) require_output(a.out, "--out");
  opt.selection = load_optional_selection(a.train_flags.features);

  LoadedDataset loaded;
  if (!a.train.empty()) {
    loaded = load_dataset(a.train, a.common.header);
  } else {
    loaded.data = gen_synthetic(a.n, a.d, a.classes, a.common.seed,
                                a.shape == "rings" ? SyntheticShape::rings : SyntheticShape::blobs);
    loaded.label_map = LabelMap::identity(a.classes);
  }
  const Split split = train_test_split(loaded.data, a.test_fraction, a.common.seed);
  const auto rows = run_bench(split, loaded.label_map, opt, a.etas, a.repeats);

  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "eta,subsets,train_seconds,test_seconds,accuracy\n";
  for (const auto& r : rows)
    os << r.eta << ',' << r.subsets << ',' << r.train_seconds << ',' << r.test_seconds << ',' << r.accuracy << '\n';
  if (!a.out.empty()) io::write_file_atomic(a.out, os.str());
  out << os.str();
  return 0;
}

struct GenArgs {
  CommonFlags common;
  std::string out, test_out, shape = "blobs";
  std::size_t n = 1000, d = 2, classes = 2;
  double test_fraction = 0.25;
};

inline void save_any(const Dataset& data, const fs::path& path, bool header) {
  const auto ext = path.extension().string();
  if (ext == ".bin" || ext == ".mckd") save_binary(data, path);
  else save_csv(data, path, nullptr, header);
}

inline int cmd_gen_data(const GenArgs& a, std::ostream& out) {
  a.common.validate();
  require_output(a.out, "--out");
  if (!a.test_out.empty()) {
    require_output(a.test_out, "--test-out");
    if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0))
      throw Error(ErrorKind::validation, "--test-fraction must lie in (0, 1)");
  }
  const Dataset data = gen_synthetic(a.n, a.d, a.classes, a.common.seed,
                                     a.shape == "rings" ? SyntheticShape::rings : SyntheticShape::blobs);
  if (a.test_out.empty()) {
    save_any(data, a.out, a.common.header);
    out << "wrote " << data.size() << " rows -> " << a.out << '\n';
  } else {
    const Split s = train_test_split(data, a.test_fraction, a.common.seed);
    save_any(s.train, a.out, a.common.header);
    save_any(s.test, a.test_out, a.common.header);
    out << "wrote " << s.train.size() << " train rows -> " << a.out << ", " << s.test.size() << " test rows -> "
        << a.test_out << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multicolumn kernel extreme learning machine"};
  app.require_subcommand(1);

  PartitionArgs part;
  TrainArgs train;
  PredictArgs predict;
  EvaluateArgs eval;
  SelectArgs select;
  BenchArgs bench;
  GenArgs gen;
  std::function<int()> action;

  auto* c_part = app.add_subcommand("partition", "build the partition tree and report its splits");
  add_common_flags(c_part, part.common);
  c_part->add_option("--train", part.train, "training data (CSV or .bin)");
  c_part->add_option("--eta", part.eta, "chopping rounds")->capture_default_str();
  c_part->add_option("--features", part.features, "feature selection file");
  c_part->add_option("--out", part.out, "write the tree as JSON");
  c_part->callback([&] { action = [&] { return cmd_partition(part, out); }; });

  auto* c_train = app.add_subcommand("train", "train a classifier and write a model file");
  add_common_flags(c_train, train.common);
  add_train_flags(c_train, train.train_flags);
  c_train->add_option("--train", train.train, "training data (CSV or .bin)");
  c_train->add_option("--model,--out", train.model, "model file to write");
  c_train->callback([&] { action = [&] { return cmd_train(train, out); }; });

  auto* c_pred = app.add_subcommand("predict", "predict labels for a query file");
  add_common_flags(c_pred, predict.common);
  c_pred->add_option("--model", predict.model, "model file");
  c_pred->add_option("--test", predict.test, "query data (labels optional)");
  c_pred->add_option("--out", predict.out, "predictions CSV");
  c_pred->add_flag("--votes", predict.votes, "add the per-subset vote record (mckelm only)");
  c_pred->callback([&] { action = [&] { return cmd_predict(predict, out); }; });

  auto* c_eval = app.add_subcommand("evaluate", "score a model on labeled test data");
  add_common_flags(c_eval, eval.common);
  add_train_flags(c_eval, eval.train_flags);
  c_eval->add_option("--model", eval.model, "saved model file");
  c_eval->add_option("--train", eval.train, "train in-process on this data instead of loading a model");
  c_eval->add_option("--test", eval.test, "labeled test data");
  c_eval->add_option("--out", eval.out, "flat key=value report");
  c_eval->add_option("--json", eval.json, "structured JSON report");
  c_eval->callback([&] { action = [&] { return cmd_evaluate(eval, out); }; });

  auto* c_sel = app.add_subcommand("select-features", "rank features by attribution scores");
  add_common_flags(c_sel, select.common);
  c_sel->add_option("--attributions", select.attributions, "attribution tensor (CSV or .bin/.mcka)");
  c_sel->add_option("--top-m", select.top_m, "features to keep")->capture_default_str();
  c_sel->add_flag("--abs", select.absolute, "rank by absolute score");
  c_sel->add_option("--out", select.out, "selection file to write");
  c_sel->callback([&] { action = [&] { return cmd_select_features(select, out); }; });

  auto* c_bench = app.add_subcommand("bench", "sweep eta and report time and accuracy");
  add_common_flags(c_bench, bench.common);
  add_train_flags(c_bench, bench.train_flags);
  c_bench->add_option("--train", bench.train, "dataset to split (synthetic data when absent)");
  c_bench->add_option("--etas", bench.etas, "eta values")->delimiter(',');
  c_bench->add_option("--repeats", bench.repeats, "runs per eta (median reported)")->capture_default_str();
  c_bench->add_option("--test-fraction", bench.test_fraction, "held-out fraction")->capture_default_str();
  c_bench->add_option("--n", bench.n, "synthetic rows")->capture_default_str();
  c_bench->add_option("--d", bench.d, "synthetic features")->capture_default_str();
  c_bench->add_option("--classes", bench.classes, "synthetic classes")->capture_default_str();
  c_bench->add_option("--shape", bench.shape, "blobs|rings")->check(CLI::IsMember({"blobs", "rings"}));
  c_bench->add_option("--out", bench.out, "CSV table");
  c_bench->callback([&] { action = [&] { return cmd_bench(bench, out); }; });

  auto* c_gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  add_common_flags(c_gen, gen.common);
  c_gen->add_option("--n", gen.n, "rows")->capture_default_str();
  c_gen->add_option("--d", gen.d, "features")->capture_default_str();
  c_gen->add_option("--classes", gen.classes, "classes")->capture_default_str();
  c_gen->add_option("--shape", gen.shape, "blobs|rings")->check(CLI::IsMember({"blobs", "rings"}));
  c_gen->add_option("--out", gen.out, "output file (.csv or .bin)");
  c_gen->add_option("--test-out", gen.test_out, "also split off a test file");
  c_gen->add_option("--test-fraction", gen.test_fraction, "fraction for --test-out")->capture_default_str();
  c_gen->callback([&] { action = [&] { return cmd_gen_data(gen, out); }; });

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const Error& e) {
    err << "mckelm: " << e.what() << '\n';
    return exit_code(e.kind());
  }
  std::vector<const char*> expanded;
  for (const auto& a : args) expanded.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(expanded.size()), expanded.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return 0;
    }
    err << "mckelm: validation error: " << e.what() << '\n';
    return exit_code(ErrorKind::validation);
  }

  try {
    return action();
  } catch (const Error& e) {
    err << "mckelm: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "mckelm: I/O error: " << e.what() << '\n';
    return exit_code(ErrorKind::io);
  } catch (const std::exception& e) {
    err << "mckelm: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mckelm::cli
