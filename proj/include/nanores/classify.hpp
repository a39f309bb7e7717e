#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanores/errors.hpp"
#include "nanores/io.hpp"
#include "nanores/linalg.hpp"
#include "nanores/rng.hpp"

namespace nanores {

/// Uniform decimation without interpolation: out[i] = trace[i * N / k]
/// (integer division), k values from a length-N trace.
inline std::vector<double> subsample(const std::vector<double>& trace, std::size_t k) {
    const std::size_t n = trace.size();
    if (k == 0) throw InvalidArgument("subsample: k must be >= 1");
    if (k > n) throw InvalidArgument("subsample: k exceeds trace length");
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = trace[i * n / k];
    return out;
}

/// Row-major feature matrix with one label per row.
struct FeatureMatrix {
    std::vector<double> data;
    std::size_t n = 0, d = 0;
    std::vector<int> labels;
    std::size_t subset_size = 0;
    std::string source;  ///< "raw" or "nanowire"

    const double* row(std::size_t i) const { return &data[i * d]; }
    double* row(std::size_t i) { return &data[i * d]; }

    void add_row(const std::vector<double>& features, int label) {
        if (n == 0 && d == 0) d = features.size();
        if (features.size() != d) throw ShapeError("feature matrix: inconsistent row width");
        data.insert(data.end(), features.begin(), features.end());
        labels.push_back(label);
        ++n;
    }

    std::vector<int> classes() const {
        std::vector<int> c = labels;
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        return c;
    }
};

/// Stratified split. Per class, round(test_fraction * m) rows (at least 1,
/// at most m-1) go to the test set, chosen by a seeded shuffle of that
/// class's row indices. Rows keep their original relative order.
inline std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& fm,
                                                     double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InvalidArgument("split: test_fraction must lie in (0, 1)");
    if (fm.n == 0) throw InsufficientData("split: empty feature matrix");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < fm.n; ++i) by_class[fm.labels[i]].push_back(i);

    Rng rng(derive_seed(seed, "split"));
    std::vector<char> is_test(fm.n, 0);
    for (auto& [label, idx] : by_class) {
        if (idx.size() < 2)
            throw InsufficientData("split: class " + std::to_string(label) +
                                   " has fewer than 2 samples");
        const auto m = static_cast<double>(idx.size());
        auto n_test = static_cast<std::size_t>(std::llround(test_fraction * m));
        n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
        rng.shuffle(idx);
        for (std::size_t j = 0; j < n_test; ++j) is_test[idx[j]] = 1;
    }

    FeatureMatrix train, test;
    train.d = test.d = fm.d;
    train.subset_size = test.subset_size = fm.subset_size;
    train.source = test.source = fm.source;
    for (std::size_t i = 0; i < fm.n; ++i) {
        auto& dst = is_test[i] ? test : train;
        dst.data.insert(dst.data.end(), fm.row(i), fm.row(i) + fm.d);
        dst.labels.push_back(fm.labels[i]);
        ++dst.n;
    }
    return {std::move(train), std::move(test)};
}

/// Per-feature affine map fitted on training data: (x - mean) / scale with
/// scale the population standard deviation, or 1 for constant features.
struct Standardization {
    std::vector<double> mean, scale;

    std::vector<double> apply(const double* row, std::size_t d) const {
        if (mean.size() != d) throw ShapeError("standardization: width mismatch");
        std::vector<double> out(d);
        for (std::size_t j = 0; j < d; ++j) out[j] = (row[j] - mean[j]) / scale[j];
        return out;
    }
};

inline Standardization fit_standardization(const FeatureMatrix& fm) {
    Standardization s;
    s.mean.assign(fm.d, 0.0);
    s.scale.assign(fm.d, 1.0);
    if (fm.n == 0) return s;
    for (std::size_t i = 0; i < fm.n; ++i)
        for (std::size_t j = 0; j < fm.d; ++j) s.mean[j] += fm.row(i)[j];
    for (double& m : s.mean) m /= static_cast<double>(fm.n);
    std::vector<double> var(fm.d, 0.0);
    for (std::size_t i = 0; i < fm.n; ++i)
        for (std::size_t j = 0; j < fm.d; ++j) {
            const double c = fm.row(i)[j] - s.mean[j];
            var[j] += c * c;
        }
    for (std::size_t j = 0; j < fm.d; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(fm.n));
        s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

enum class ClassifierKind { logistic, lda, svm };

inline std::string classifier_kind_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::logistic: return "lr";
        case ClassifierKind::lda: return "lda";
        case ClassifierKind::svm: return "svm";
    }
    throw InvalidArgument("unknown classifier kind");
}

inline ClassifierKind classifier_kind_from_name(const std::string& name) {
    if (name == "lr") return ClassifierKind::logistic;
    if (name == "lda") return ClassifierKind::lda;
    if (name == "svm") return ClassifierKind::svm;
    throw ConfigError("unknown classifier '" + name + "' (expected lr, lda or svm)");
}

/// All three classifiers reduce to the same linear scoring form:
/// score_c(x) = w_c . standardize(x) + b_c, predict the argmax, ties to the
/// lowest class id.
struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::logistic;
    std::vector<int> classes;
    std::vector<double> weights;  ///< c x d row-major
    std::vector<double> biases;   ///< c
    Standardization standardization;
    double train_time_s = 0.0;
};

struct LogisticHyper {
    double lambda = 1e-4;
    int max_iters = 10000;
    double tol = 1e-6;  ///< gradient max-norm
};
struct LdaHyper {
    double gamma = 0.1;  ///< shrinkage toward the covariance diagonal
};
struct SvmHyper {
    double c = 1.0;
    int max_epochs = 10000;
    double tol = 1e-6;  ///< relative objective change
};

namespace classify_detail {

inline void check_trainable(const FeatureMatrix& fm) {
    if (fm.n == 0) throw InsufficientData("train: empty feature matrix");
    if (fm.d == 0) throw ShapeError("train: zero-width features");
    for (double v : fm.data)
        if (!std::isfinite(v)) throw NumericalError("train: non-finite feature value");
    if (fm.classes().size() < 2)
        throw DegenerateLabels("train: need at least 2 distinct classes");
}

inline std::vector<std::size_t> class_indices(const FeatureMatrix& fm,
                                              const std::vector<int>& classes) {
    std::map<int, std::size_t> pos;
    for (std::size_t c = 0; c < classes.size(); ++c) pos[classes[c]] = c;
    std::vector<std::size_t> yi(fm.n);
    for (std::size_t i = 0; i < fm.n; ++i) yi[i] = pos.at(fm.labels[i]);
    return yi;
}

inline std::vector<double> standardized_data(const FeatureMatrix& fm, const Standardization& s) {
    std::vector<double> x(fm.n * fm.d);
    for (std::size_t i = 0; i < fm.n; ++i) {
        auto row = s.apply(fm.row(i), fm.d);
        std::copy(row.begin(), row.end(), x.begin() + i * fm.d);
    }
    return x;
}

}  // namespace classify_detail

/// Multinomial cross-entropy objective with ridge penalty on the weights
/// (biases unpenalized), plus its gradient. Parameters are packed as c rows
/// of (d weights, 1 bias). Exposed separately so the gradient can be checked
/// against finite differences.
inline double logistic_loss_grad(const std::vector<double>& x, std::size_t n, std::size_t d,
                                 const std::vector<std::size_t>& yidx, std::size_t c,
                                 const std::vector<double>& params, double lambda,
                                 std::vector<double>& grad) {
    const std::size_t stride = d + 1;
    if (params.size() != c * stride) throw ShapeError("logistic_loss_grad: bad parameter size");
    grad.assign(params.size(), 0.0);
    std::vector<double> scores(c);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &x[i * d];
        double top = -1e300;
        for (std::size_t k = 0; k < c; ++k) {
            const double* wk = &params[k * stride];
            double acc = wk[d];
            for (std::size_t j = 0; j < d; ++j) acc += wk[j] * row[j];
            scores[k] = acc;
            top = std::max(top, acc);
        }
        double z = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            scores[k] = std::exp(scores[k] - top);
            z += scores[k];
        }
        loss -= std::log(scores[yidx[i]] / z);
        for (std::size_t k = 0; k < c; ++k) {
            const double p = scores[k] / z - (k == yidx[i] ? 1.0 : 0.0);
            double* gk = &grad[k * stride];
            for (std::size_t j = 0; j < d; ++j) gk[j] += p * row[j];
            gk[d] += p;
        }
    }
    loss /= static_cast<double>(n);
    for (double& g : grad) g /= static_cast<double>(n);
    double penalty = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const double* wk = &params[k * stride];
        double* gk = &grad[k * stride];
        for (std::size_t j = 0; j < d; ++j) {
            penalty += wk[j] * wk[j];
            gk[j] += lambda * wk[j];
        }
    }
    return loss + 0.5 * lambda * penalty;
}

/// Full-batch gradient descent from zero initialization with a fixed step of
/// 1/L, L estimated from the top eigenvalue of the (bias-augmented) Gram
/// matrix. Stops when the gradient max-norm drops below tol.
inline ClassifierModel train_logistic(const FeatureMatrix& fm, LogisticHyper hyper = {}) {
    classify_detail::check_trainable(fm);
    const auto t0 = std::chrono::steady_clock::now();

    ClassifierModel model;
    model.kind = ClassifierKind::logistic;
    model.classes = fm.classes();
    model.standardization = fit_standardization(fm);
    const auto x = classify_detail::standardized_data(fm, model.standardization);
    const auto yidx = classify_detail::class_indices(fm, model.classes);
    const std::size_t n = fm.n, d = fm.d, c = model.classes.size();

    // Lipschitz bound for softmax cross-entropy: 0.5 * lambda_max of the
    // Gram matrix of [x, 1], plus the ridge term.
    std::vector<double> aug(n * (d + 1));
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(&x[i * d], &x[i * d] + d, &aug[i * (d + 1)]);
        aug[i * (d + 1) + d] = 1.0;
    }
    const double lip = 0.5 * top_eigenvalue_gram(aug, n, d + 1) + hyper.lambda;
    const double step = 1.0 / std::max(lip, 1e-12);

    const std::size_t stride = d + 1;
    std::vector<double> params(c * stride, 0.0), grad;
    for (int it = 0; it < hyper.max_iters; ++it) {
        logistic_loss_grad(x, n, d, yidx, c, params, hyper.lambda, grad);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax <= hyper.tol) break;
        for (std::size_t j = 0; j < params.size(); ++j) params[j] -= step * grad[j];
    }

    model.weights.resize(c * d);
    model.biases.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        std::copy(&params[k * stride], &params[k * stride] + d, &model.weights[k * d]);
        model.biases[k] = params[k * stride + d];
    }
    model.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return model;
}

/// Linear discriminant analysis with shrinkage: pooled covariance
/// S' = (1-gamma) S + gamma diag(S), zero diagonal entries replaced by 1,
/// class score w_c = S'^-1 mu_c, b_c = -mu_c.w_c/2 + log prior_c.
inline ClassifierModel train_lda(const FeatureMatrix& fm, LdaHyper hyper = {}) {
    classify_detail::check_trainable(fm);
    if (!(hyper.gamma >= 0.0 && hyper.gamma <= 1.0))
        throw ConfigError("lda: gamma must lie in [0, 1]");
    const auto t0 = std::chrono::steady_clock::now();

    ClassifierModel model;
    model.kind = ClassifierKind::lda;
    model.classes = fm.classes();
    model.standardization = fit_standardization(fm);
    const auto x = classify_detail::standardized_data(fm, model.standardization);
    const auto yidx = classify_detail::class_indices(fm, model.classes);
    const std::size_t n = fm.n, d = fm.d, c = model.classes.size();
    if (n <= c)
        throw InsufficientData("lda: pooled covariance needs more samples than classes");

    std::vector<std::vector<double>> mu(c, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[yidx[i]];
        for (std::size_t j = 0; j < d; ++j) mu[yidx[i]][j] += x[i * d + j];
    }
    for (std::size_t k = 0; k < c; ++k)
        for (double& v : mu[k]) v /= static_cast<double>(counts[k]);

    std::vector<double> cov(d * d, 0.0);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = x[i * d + j] - mu[yidx[i]][j];
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = centered[a];
            if (ca == 0.0) continue;
            for (std::size_t b = a; b < d; ++b) cov[a * d + b] += ca * centered[b];
        }
    }
    const double denom = static_cast<double>(n - c);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov[a * d + b] /= denom;
            cov[b * d + a] = cov[a * d + b];
        }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            if (a != b) cov[a * d + b] *= (1.0 - hyper.gamma);
    for (std::size_t a = 0; a < d; ++a)
        if (cov[a * d + a] == 0.0) cov[a * d + a] = 1.0;

    model.weights.resize(c * d);
    model.biases.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        auto w = cholesky_solve(cov, mu[k], d);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += mu[k][j] * w[j];
        std::copy(w.begin(), w.end(), &model.weights[k * d]);
        model.biases[k] =
            -0.5 * dot + std::log(static_cast<double>(counts[k]) / static_cast<double>(n));
    }
    model.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return model;
}

/// One-vs-rest linear SVM trained by full-batch Pegasos-style subgradient
/// descent on (lambda/2)||w||^2 + mean hinge, lambda = 1/(c_hyper * n). The
/// bias rides along as an augmented always-one feature. The iterate with the
/// best objective seen is kept.
inline ClassifierModel train_svm(const FeatureMatrix& fm, SvmHyper hyper = {}) {
    classify_detail::check_trainable(fm);
    if (!(hyper.c > 0.0)) throw ConfigError("svm: C must be positive");
    const auto t0 = std::chrono::steady_clock::now();

    ClassifierModel model;
    model.kind = ClassifierKind::svm;
    model.classes = fm.classes();
    model.standardization = fit_standardization(fm);
    const auto x = classify_detail::standardized_data(fm, model.standardization);
    const auto yidx = classify_detail::class_indices(fm, model.classes);
    const std::size_t n = fm.n, d = fm.d, c = model.classes.size();
    const double lambda = 1.0 / (hyper.c * static_cast<double>(n));

    model.weights.assign(c * d, 0.0);
    model.biases.assign(c, 0.0);
    const std::size_t da = d + 1;  // augmented width

    std::vector<double> w(da), g(da), best_w(da);
    std::vector<double> margins(n);
    auto objective = [&](const std::vector<double>& wv, const std::vector<double>& y) {
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = wv[d];
            const double* row = &x[i * d];
            for (std::size_t j = 0; j < d; ++j) s += wv[j] * row[j];
            margins[i] = y[i] * s;
            hinge += std::max(0.0, 1.0 - margins[i]);
        }
        double norm2 = 0.0;
        for (std::size_t j = 0; j < da; ++j) norm2 += wv[j] * wv[j];
        return 0.5 * lambda * norm2 + hinge / static_cast<double>(n);
    };

    for (std::size_t k = 0; k < c; ++k) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = yidx[i] == k ? 1.0 : -1.0;
        std::fill(w.begin(), w.end(), 0.0);
        double best = objective(w, y);
        best_w = w;
        double prev = best;
        for (int t = 1; t <= hyper.max_epochs; ++t) {
            // margins are current for w thanks to the objective() call above
            for (std::size_t j = 0; j < da; ++j) g[j] = lambda * w[j];
            for (std::size_t i = 0; i < n; ++i) {
                if (margins[i] < 1.0) {
                    const double* row = &x[i * d];
                    const double yi = y[i] / static_cast<double>(n);
                    for (std::size_t j = 0; j < d; ++j) g[j] -= yi * row[j];
                    g[d] -= yi;
                }
            }
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            for (std::size_t j = 0; j < da; ++j) w[j] -= eta * g[j];
            const double obj = objective(w, y);
            if (obj < best) {
                best = obj;
                best_w = w;
            }
            if (std::abs(obj - prev) <= hyper.tol * std::max(1.0, std::abs(obj))) break;
            prev = obj;
        }
        std::copy(best_w.begin(), best_w.begin() + d, &model.weights[k * d]);
        model.biases[k] = best_w[d];
    }
    model.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return model;
}

inline ClassifierModel train_classifier(const FeatureMatrix& fm, ClassifierKind kind,
                                        LogisticHyper lr = {}, LdaHyper lda = {},
                                        SvmHyper svm = {}) {
    switch (kind) {
        case ClassifierKind::logistic: return train_logistic(fm, lr);
        case ClassifierKind::lda: return train_lda(fm, lda);
        case ClassifierKind::svm: return train_svm(fm, svm);
    }
    throw InvalidArgument("unknown classifier kind");
}

inline std::vector<double> decision_scores(const ClassifierModel& model, const double* row,
                                           std::size_t d) {
    if (d != model.standardization.mean.size())
        throw ShapeError("predict: feature width does not match model");
    const auto xs = model.standardization.apply(row, d);
    std::vector<double> scores(model.classes.size());
    for (std::size_t k = 0; k < model.classes.size(); ++k) {
        double acc = model.biases[k];
        const double* wk = &model.weights[k * d];
        for (std::size_t j = 0; j < d; ++j) acc += wk[j] * xs[j];
        scores[k] = acc;
    }
    return scores;
}

/// Ties resolve to the lowest class id (classes are sorted ascending).
inline std::vector<int> predict(const ClassifierModel& model, const FeatureMatrix& fm) {
    std::vector<int> out(fm.n);
    for (std::size_t i = 0; i < fm.n; ++i) {
        const auto scores = decision_scores(model, fm.row(i), fm.d);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < scores.size(); ++k)
            if (scores[k] > scores[arg]) arg = k;
        out[i] = model.classes[arg];
    }
    return out;
}

struct EvalReport {
    double accuracy = 0.0;
    std::vector<int> classes;
    std::vector<std::vector<std::size_t>> confusion;  ///< [true][predicted]
    std::vector<double> precision, recall;
    std::vector<char> precision_defined, recall_defined;
    double train_time_s = 0.0;
    std::size_t subset_size = 0;
    std::string source;
    std::size_t n_test = 0;
};

inline EvalReport evaluate(const ClassifierModel& model, const FeatureMatrix& fm) {
    if (fm.n == 0) throw InsufficientData("evaluate: empty test set");
    std::map<int, std::size_t> pos;
    for (std::size_t k = 0; k < model.classes.size(); ++k) pos[model.classes[k]] = k;
    for (int label : fm.labels)
        if (!pos.count(label))
            throw InvalidArgument("evaluate: test label " + std::to_string(label) +
                                  " not in model classes");

    const auto predictions = predict(model, fm);
    const std::size_t c = model.classes.size();
    EvalReport rep;
    rep.classes = model.classes;
    rep.confusion.assign(c, std::vector<std::size_t>(c, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < fm.n; ++i) {
        const std::size_t t = pos.at(fm.labels[i]);
        const std::size_t p = pos.at(predictions[i]);
        ++rep.confusion[t][p];
        if (t == p) ++correct;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(fm.n);
    rep.precision.assign(c, 0.0);
    rep.recall.assign(c, 0.0);
    rep.precision_defined.assign(c, 0);
    rep.recall_defined.assign(c, 0);
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t col = 0, row = 0;
        for (std::size_t j = 0; j < c; ++j) {
            col += rep.confusion[j][k];
            row += rep.confusion[k][j];
        }
        if (col > 0) {
            rep.precision[k] = static_cast<double>(rep.confusion[k][k]) / static_cast<double>(col);
            rep.precision_defined[k] = 1;
        }
        if (row > 0) {
            rep.recall[k] = static_cast<double>(rep.confusion[k][k]) / static_cast<double>(row);
            rep.recall_defined[k] = 1;
        }
    }
    rep.train_time_s = model.train_time_s;
    rep.subset_size = fm.subset_size;
    rep.source = fm.source;
    rep.n_test = fm.n;
    return rep;
}

// --- model serialization ---

inline nlohmann::ordered_json model_to_json(const ClassifierModel& model) {
    nlohmann::ordered_json doc;
    doc["kind"] = classifier_kind_name(model.kind);
    doc["classes"] = model.classes;
    doc["weights"] = model.weights;
    doc["biases"] = model.biases;
    doc["standardization"] = {{"mean", model.standardization.mean},
                              {"scale", model.standardization.scale}};
    doc["train_time_s"] = model.train_time_s;
    return doc;
}

inline ClassifierModel model_from_json(const nlohmann::json& doc) {
    ClassifierModel model;
    try {
        model.kind = classifier_kind_from_name(doc.at("kind").get<std::string>());
        model.classes = doc.at("classes").get<std::vector<int>>();
        model.weights = doc.at("weights").get<std::vector<double>>();
        model.biases = doc.at("biases").get<std::vector<double>>();
        model.standardization.mean =
            doc.at("standardization").at("mean").get<std::vector<double>>();
        model.standardization.scale =
            doc.at("standardization").at("scale").get<std::vector<double>>();
        model.train_time_s = doc.value("train_time_s", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model json: ") + e.what());
    }
    const std::size_t c = model.classes.size();
    const std::size_t d = c ? model.standardization.mean.size() : 0;
    if (model.biases.size() != c || model.weights.size() != c * d ||
        model.standardization.scale.size() != d)
        throw ShapeError("model json: inconsistent dimensions");
    return model;
}

inline void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
    write_file(path, model_to_json(model).dump(2) + "\n");
}

inline ClassifierModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("model " + path.string() + ": " + e.what());
    }
}

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& rep) {
    nlohmann::ordered_json doc;
    doc["accuracy"] = rep.accuracy;
    doc["classes"] = rep.classes;
    doc["confusion"] = rep.confusion;
    doc["precision"] = rep.precision;
    doc["recall"] = rep.recall;
    doc["precision_defined"] = std::vector<int>(rep.precision_defined.begin(),
                                                rep.precision_defined.end());
    doc["recall_defined"] = std::vector<int>(rep.recall_defined.begin(),
                                             rep.recall_defined.end());
    doc["train_time_s"] = rep.train_time_s;
    doc["subset_size"] = rep.subset_size;
    doc["source"] = rep.source;
    doc["n_test"] = rep.n_test;
    return doc;
}

}  // namespace nanores
