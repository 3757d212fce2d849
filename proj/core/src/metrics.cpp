#include "lutpim/metrics.hpp"

#include "lutpim/errors.hpp"
#include "lutpim/inference.hpp"
#include "lutpim/perf_model.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fmt/format.h>
#include <mutex>
#include <thread>

namespace lutpim {
namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                  double probability_gap) {
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.tn = tn;
    r.fn = fn;
    r.accuracy = ratio(tp + tn, tp + fp + tn + fn);
    r.precision = ratio(tp, tp + fp);
    r.recall = ratio(tp, tp + fn);
    const double denom = r.precision + r.recall;
    r.f1 = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
    r.probability_gap = probability_gap;
    return r;
}

std::size_t argmax(std::span<const double> v) {
    if (v.empty()) {
        throw DomainError("argmax of an empty vector");
    }
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

MetricsReport compute_metrics(std::span<const Prediction> predictions) {
    if (predictions.empty()) {
        throw DomainError("cannot score an empty corpus");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double gap = 0.0;
    for (const auto& p : predictions) {
        const bool truth = p.truth == 1;
        const bool said = p.predicted == 1;
        tp += truth && said;
        fp += !truth && said;
        tn += !truth && !said;
        fn += truth && !said;
        if (p.truth >= p.probabilities.size() || p.predicted >= p.probabilities.size()) {
            throw ShapeError(fmt::format("class index outside a {}-entry probability vector", p.probabilities.size()));
        }
        gap += p.probabilities[p.truth] - p.probabilities[p.predicted];
    }
    return metrics_from_counts(tp, fp, tn, fn, gap / static_cast<double>(predictions.size()));
}

double top1_agreement(std::span<const Prediction> a, std::span<const Prediction> b) {
    if (a.size() != b.size() || a.empty()) {
        throw DomainError(fmt::format("agreement needs two equal, non-empty lists ({} vs {})", a.size(), b.size()));
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same += a[i].predicted == b[i].predicted;
    }
    return ratio(same, a.size());
}

Classifier float_classifier(const NetworkSpec& net, const WeightSet& w) {
    return [net, w](const GrayImage& img) { return infer_float(net, w, img); };
}

Classifier lut_classifier(const NetworkSpec& net, const WeightSet& wq, const SystemConfig& cfg) {
    return [net, wq, cfg](const GrayImage& img) { return infer_lut(net, wq, img, cfg).output; };
}

std::vector<Prediction> predict_corpus(const Classifier& classify, std::span<const CorpusSample> corpus,
                                       std::size_t side, unsigned threads) {
    std::vector<Prediction> out(corpus.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < corpus.size(); i = next++) {
            try {
                const auto& s = corpus[i];
                Prediction p;
                p.truth = static_cast<std::size_t>(s.label);
                p.probabilities = classify(binary_to_model_image(s.bytes, side));
                p.predicted = argmax(p.probabilities);
                out[i] = std::move(p);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = corpus.size();
            }
        }
    };
    unsigned n = threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : threads;
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(corpus.size(), 1)));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

MetricsReport evaluate(const NetworkSpec& net, const WeightSet& w, std::span<const CorpusSample> corpus,
                       unsigned precision, unsigned threads) {
    if (corpus.empty()) {
        throw DomainError("cannot evaluate on an empty corpus");
    }
    Classifier classify;
    if (precision == 32) {
        classify = float_classifier(net, w);
    } else {
        pass_factor(precision);
        SystemConfig cfg;
        cfg.precision_bits = precision;
        classify = lut_classifier(net, w, cfg);
    }
    const auto preds = predict_corpus(classify, corpus, net.input.h, threads);
    return compute_metrics(preds);
}

std::string metrics_table(std::span<const std::pair<std::string, MetricsReport>> rows) {
    std::string out = "label,accuracy,precision,recall,f1,probability_gap,tp,fp,tn,fn\n";
    for (const auto& [label, r] : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", label, r.accuracy, r.precision, r.recall, r.f1,
                           r.probability_gap, r.tp, r.fp, r.tn, r.fn);
    }
    out += fmt::format("# reference detector (VirusTotal corpus) [{}]: accuracy 0.987, f1 0.987, recall 0.982\n",
                       kPublishedMarker);
    return out;
}

} // namespace lutpim
