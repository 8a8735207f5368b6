#pragma once

#include "mckelm/baselines.hpp"
#include "mckelm/dataset.hpp"
#include "mckelm/error.hpp"
#include "mckelm/feature_select.hpp"
#include "mckelm/kelm.hpp"
#include "mckelm/mckelm.hpp"
#include "mckelm/model_io.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mckelm {

struct TrainOptions {
  ModelKind classifier = ModelKind::mckelm;
  KernelParams kernel;
  double reg_c = 1e-3;
  std::size_t eta = 2;
  std::size_t route_k = 3;
  VoteMode vote_mode = VoteMode::majority;
  std::size_t hidden = 0;  // ELM hidden neurons, 0 = default_hidden_count(n)
  std::size_t knn_k = 1;
  std::uint64_t seed = 0;
  bool clamp = false;  // always on for the chi-square kernel
  std::size_t threads = default_thread_count();
  std::optional<FeatureSelection> selection;

  bool effective_clamp() const { return clamp || kernel.kind == KernelKind::chi_square; }

  // Parameter checks that do not need the data.
  void validate() const {
    const bool kernel_model = classifier == ModelKind::mckelm || classifier == ModelKind::kelm ||
                              classifier == ModelKind::rkelm;
    if (kernel_model) kernel.validate();
    if (!(reg_c > 0.0)) throw Error(ErrorKind::validation, "--reg-c must be positive");
    if (eta > kMaxEta) throw Error(ErrorKind::validation, "--eta must be at most " + std::to_string(kMaxEta));
    if (route_k < 1) throw Error(ErrorKind::validation, "--route-k must be at least 1");
    if (knn_k < 1) throw Error(ErrorKind::validation, "k-NN k must be at least 1");
    if (threads < 1) throw Error(ErrorKind::validation, "--threads must be at least 1");
  }
};

// Applies the optional feature selection to raw rows.
inline FeatureMatrix select_features(const std::optional<FeatureSelection>& sel, const FeatureMatrix& raw) {
  return sel ? apply_selection(*sel, raw) : raw;
}

inline ModelFile train_model(const Dataset& raw_train, const LabelMap& labels, const TrainOptions& opt) {
  opt.validate();
  validate(raw_train);
  ModelFile f;
  f.kind = opt.classifier;
  f.labels = labels;
  f.selection = opt.selection;
  f.clamp = opt.effective_clamp();

  Dataset train{select_features(opt.selection, raw_train.features), raw_train.labels, raw_train.class_count};
  f.normalizer = fit_normalizer(train);
  train.features = apply_normalizer(f.normalizer, train.features, f.clamp);
  const Matrix targets = one_hot(train.labels, train.class_count);
  const KelmConfig kelm{opt.kernel, opt.reg_c};

  switch (opt.classifier) {
    case ModelKind::mckelm: {
      MckelmConfig cfg;
      cfg.partition.eta = opt.eta;
      cfg.kelm = kelm;
      cfg.route_k = opt.route_k;
      cfg.vote_mode = opt.vote_mode;
      cfg.threads = opt.threads;
      f.model = train_mckelm(train, targets, cfg);
      break;
    }
    case ModelKind::kelm: f.model = train_kelm(train, targets, kelm, 0, opt.threads); break;
    case ModelKind::elm:
      f.model = train_elm(train, targets, opt.hidden ? opt.hidden : default_hidden_count(train.size()), opt.reg_c, opt.seed);
      break;
    case ModelKind::rkelm: f.model = train_rkelm(train, targets, opt.kernel, opt.reg_c, opt.seed); break;
    case ModelKind::knn: f.model = train_knn(train, opt.knn_k); break;
    case ModelKind::gnb: f.model = train_gnb(train); break;
  }
  return f;
}

// Raw query rows -> model input space.
inline Matrix prepare_queries(const ModelFile& f, const FeatureMatrix& raw) {
  if (static_cast<std::size_t>(raw.cols()) != f.input_dimension()) {
    throw Error(ErrorKind::shape, "query data has " + std::to_string(raw.cols()) + " features, model expects " +
                                      std::to_string(f.input_dimension()));
  }
  return apply_normalizer(f.normalizer, select_features(f.selection, raw), f.clamp).cast<double>();
}

struct ModelPrediction {
  LabelVector labels;                // class indices
  std::vector<QueryReport> reports;  // MCKELM only
};

inline ModelPrediction predict_model(const ModelFile& f, const FeatureMatrix& raw_queries,
                                     std::size_t threads = default_thread_count()) {
  const Matrix q = prepare_queries(f, raw_queries);
  ModelPrediction out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MckelmModel>) {
          auto p = predict_mckelm(m, q, threads);
          out.labels = std::move(p.labels);
          out.reports = std::move(p.reports);
        } else if constexpr (std::is_same_v<T, KelmColumn>) {
          out.labels = predict_kelm(m, q, threads).labels;
        } else if constexpr (std::is_same_v<T, ElmModel>) {
          out.labels = predict_elm(m, q);
        } else if constexpr (std::is_same_v<T, RkelmModel>) {
          out.labels = predict_rkelm(m, q);
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          out.labels = predict_knn(m, q);
        } else {
          out.labels = predict_gnb(m, q);
        }
      },
      f.model);
  return out;
}

}  // namespace mckelm
