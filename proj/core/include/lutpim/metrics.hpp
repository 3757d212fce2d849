#pragma once

#include "lutpim/binviz.hpp"
#include "lutpim/network.hpp"
#include "lutpim/system.hpp"
#include "lutpim/weights.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lutpim {

/// Malware (class 1) is the positive class.
struct MetricsReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// mean(P(true class) - P(predicted class)); never positive, 0 when every prediction is right.
    double probability_gap = 0.0;

    std::size_t samples() const { return tp + fp + tn + fn; }
};

/// Ratios from confusion counts; a ratio with a zero denominator is 0.
MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                  double probability_gap = 0.0);

struct Prediction {
    std::size_t truth = 0;
    std::size_t predicted = 0;
    std::vector<double> probabilities;
};

/// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const double> v);

/// Throws DomainError for an empty prediction list.
MetricsReport compute_metrics(std::span<const Prediction> predictions);

/// Fraction of positions where both lists predict the same class.
double top1_agreement(std::span<const Prediction> a, std::span<const Prediction> b);

/// Maps a model-sized image to a probability vector. Must be callable from several threads.
using Classifier = std::function<std::vector<double>(const GrayImage&)>;

Classifier float_classifier(const NetworkSpec& net, const WeightSet& w);
Classifier lut_classifier(const NetworkSpec& net, const WeightSet& wq, const SystemConfig& cfg);

/// Converts every sample to a model image and classifies it. Work is spread over `threads`
/// workers (0 picks the hardware concurrency); results are in corpus order regardless.
std::vector<Prediction> predict_corpus(const Classifier& classify, std::span<const CorpusSample> corpus,
                                       std::size_t side = 32, unsigned threads = 0);

/// Float backend for precision 32, the LUT backend (256 clusters) for 4, 8 and 16.
/// Throws DomainError for an empty corpus.
MetricsReport evaluate(const NetworkSpec& net, const WeightSet& w, std::span<const CorpusSample> corpus,
                       unsigned precision, unsigned threads = 0);

/// Rows "label,accuracy,precision,recall,f1,probability_gap,tp,fp,tn,fn" followed by the
/// published reference row of the original detector.
std::string metrics_table(std::span<const std::pair<std::string, MetricsReport>> rows);

} // namespace lutpim
