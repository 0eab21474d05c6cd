// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aquaseg/array.hpp"
#include "aquaseg/registry.hpp"

namespace aquaseg {

/// K x K pixel counts indexed [gt][pred].
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

    std::size_t k() const noexcept { return k_; }
    std::uint64_t operator()(std::size_t gt, std::size_t pred) const noexcept { return counts_[gt * k_ + pred]; }
    std::uint64_t& operator()(std::size_t gt, std::size_t pred) noexcept { return counts_[gt * k_ + pred]; }

    std::uint64_t total() const noexcept
    {
        std::uint64_t n = 0;
        for (auto c : counts_)
            n += c;
        return n;
    }

    std::uint64_t true_positives(std::size_t i) const noexcept { return (*this)(i, i); }
    std::uint64_t false_positives(std::size_t i) const noexcept
    {
        std::uint64_t n = 0;
        for (std::size_t g = 0; g < k_; ++g)
            n += (*this)(g, i);
        return n - (*this)(i, i);
    }
    std::uint64_t false_negatives(std::size_t i) const noexcept
    {
        std::uint64_t n = 0;
        for (std::size_t p = 0; p < k_; ++p)
            n += (*this)(i, p);
        return n - (*this)(i, i);
    }

    /// Counts every pixel whose ground truth is not IGNORE.
    void accumulate(const LabelMap& pred, const LabelMap& gt)
    {
        if (pred.height != gt.height || pred.width != gt.width)
            throw Error(ErrorCode::ShapeMismatch, "prediction is " + std::to_string(pred.height) + "x" +
                                                      std::to_string(pred.width) + ", ground truth " +
                                                      std::to_string(gt.height) + "x" + std::to_string(gt.width));
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const auto g = gt.labels[i];
            if (g == LabelMap::ignore)
                continue;
            const auto p = pred.labels[i];
            if (g >= k_ || p >= k_)
                throw Error(ErrorCode::LabelOutOfRange, "pixel " + std::to_string(i) + ": gt " + std::to_string(g) +
                                                            ", pred " + std::to_string(p) + ", K=" +
                                                            std::to_string(k_));
            ++counts_[g * k_ + p];
        }
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other)
    {
        if (other.k_ != k_)
            throw Error(ErrorCode::ShapeMismatch, "cannot merge confusion matrices of size " + std::to_string(k_) +
                                                      " and " + std::to_string(other.k_));
        for (std::size_t i = 0; i < counts_.size(); ++i)
            counts_[i] += other.counts_[i];
        return *this;
    }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t k_ = 0;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& pred, const LabelMap& gt)
{
    cm.accumulate(pred, gt);
    return cm;
}

inline ConfusionMatrix merge(ConfusionMatrix a, const ConfusionMatrix& b)
{
    a += b;
    return a;
}

struct ClassScore {
    std::size_t index = 0;
    /// Absent when the class occurs in neither ground truth nor prediction.
    std::optional<double> iou;
    /// Absent when the class has no ground-truth pixels.
    std::optional<double> acc;

    bool operator==(const ClassScore&) const = default;
};

struct GroupScore {
    std::string split;
    std::string group;
    /// Mean IoU over present members; absent if no member is present.
    std::optional<double> miou;

    bool operator==(const GroupScore&) const = default;
};

struct MetricsReport {
    double aacc = 0.0;
    double miou = 0.0;
    double macc = 0.0;
    std::vector<ClassScore> per_class;
    /// In registry split order, then group order.
    std::vector<GroupScore> grouped;
    std::size_t sample_count = 0;

    bool operator==(const MetricsReport&) const = default;
};

/// aAcc = sum TP / total pixels; IoU_i = TP/(TP+FP+FN); acc_i = TP/(TP+FN).
/// Means run over present classes only.
inline MetricsReport compute(const ConfusionMatrix& cm, const CategoryRegistry& registry, std::size_t sample_count = 0)
{
    if (cm.k() != registry.size())
        throw Error(ErrorCode::ShapeMismatch, "confusion matrix K=" + std::to_string(cm.k()) + " but registry K=" +
                                                  std::to_string(registry.size()));
    const std::uint64_t total = cm.total();
    if (total == 0)
        throw Error(ErrorCode::EmptyMatrix, "no pixels were accumulated");

    MetricsReport r;
    r.sample_count = sample_count;
    std::uint64_t correct = 0;
    double iou_sum = 0.0, acc_sum = 0.0;
    std::size_t iou_n = 0, acc_n = 0;
    for (std::size_t i = 0; i < cm.k(); ++i) {
        const auto tp = cm.true_positives(i);
        const auto fp = cm.false_positives(i);
        const auto fn = cm.false_negatives(i);
        correct += tp;
        ClassScore s{i, std::nullopt, std::nullopt};
        if (tp + fp + fn > 0) {
            s.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
            iou_sum += *s.iou;
            ++iou_n;
        }
        if (tp + fn > 0) {
            s.acc = static_cast<double>(tp) / static_cast<double>(tp + fn);
            acc_sum += *s.acc;
            ++acc_n;
        }
        r.per_class.push_back(s);
    }
    r.aacc = static_cast<double>(correct) / static_cast<double>(total);
    r.miou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
    r.macc = acc_n ? acc_sum / static_cast<double>(acc_n) : 0.0;

    for (const auto& split : registry.splits()) {
        for (const auto& group : split.groups) {
            double sum = 0.0;
            std::size_t n = 0;
            for (auto idx : group.members) {
                if (const auto& iou = r.per_class[idx].iou) {
                    sum += *iou;
                    ++n;
                }
            }
            r.grouped.push_back({split.name, group.name, n ? std::optional<double>(sum / static_cast<double>(n))
                                                           : std::nullopt});
        }
    }
    return r;
}

} // namespace aquaseg
