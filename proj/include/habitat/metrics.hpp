#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "habitat/geogrid.hpp"
#include "habitat/taxonomy.hpp"

namespace habitat {

/// K x K pixel-count matrix; rows = reference class, columns = predicted
/// class. Mergeable by elementwise addition, so tile-wise accumulation is
/// exact regardless of sharding.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const { return k_; }
    std::uint64_t total() const;
    std::uint64_t at(int ref, int pred) const { return counts_[idx(ref, pred)]; }
    void add(int ref, int pred, std::uint64_t n = 1) { counts_[idx(ref, pred)] += n; }

    std::uint64_t true_positives(int cls) const { return at(cls, cls); }
    std::uint64_t false_positives(int cls) const;  // column sum minus TP
    std::uint64_t false_negatives(int cls) const;  // row sum minus TP
    std::uint64_t support(int cls) const;          // row sum

    void merge(const ConfusionMatrix& other);

    void to_csv(const std::string& path) const;
    static ConfusionMatrix from_csv(const std::string& path);

private:
    std::size_t idx(int r, int p) const {
        return static_cast<std::size_t>(r) * k_ + p;
    }
    int k_ = 0;
    std::vector<std::uint64_t> counts_;
};

/// Counts included pixels: nodata on either side is excluded, and when a
/// mask grid is given only pixels where the mask is valid (non-nodata) count.
ConfusionMatrix accumulate(const GeoGrid& pred, const GeoGrid& ref, int num_classes,
                           const GeoGrid* mask = nullptr);

ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b);

// Per-class metrics. Classes where the quantity is undefined (zero union for
// IoU/F1, zero support for recall, zero predictions for precision) come back
// as nullopt and are excluded from macro averages under the default policy.
std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& c);
std::vector<std::optional<double>> per_class_f1(const ConfusionMatrix& c);
std::vector<std::optional<double>> per_class_precision(const ConfusionMatrix& c);
std::vector<std::optional<double>> per_class_recall(const ConfusionMatrix& c);

double overall_accuracy(const ConfusionMatrix& c);

enum class UndefinedPolicy { Exclude, Zero };

/// Unweighted mean over defined entries (Exclude) or with undefined entries
/// counted as zero (Zero). Throws when every entry is undefined.
double macro_average(const std::vector<std::optional<double>>& values,
                     UndefinedPolicy policy = UndefinedPolicy::Exclude);

struct PerClassMetrics {
    int class_id = 0;
    std::string name;
    std::optional<double> iou;
    std::optional<double> f1;
    std::optional<double> precision;
    std::optional<double> recall;
    std::uint64_t support = 0;
    double frequency_percent = 0.0;  // share of included reference pixels
};

struct MetricReport {
    double overall_accuracy = 0.0;
    double macro_iou = 0.0;
    double macro_f1 = 0.0;
    double macro_recall = 0.0;
    std::uint64_t total_pixels = 0;
    std::vector<PerClassMetrics> per_class;
    UndefinedPolicy undefined_policy = UndefinedPolicy::Exclude;
};

MetricReport report(const ConfusionMatrix& c, const ClassScheme& scheme,
                    UndefinedPolicy policy = UndefinedPolicy::Exclude);

/// report.json / report.csv with the per-class table plus macro and overall
/// rows. `task` labels the section in the CSV (e.g. "multiclass", "binary").
void write_report_json(const std::vector<std::pair<std::string, MetricReport>>& sections,
                       const std::string& path);
void write_report_csv(const std::vector<std::pair<std::string, MetricReport>>& sections,
                      const std::string& path);

/// Two-class scheme used for the binary change/no-change task.
ClassScheme binary_scheme();

} // namespace habitat
