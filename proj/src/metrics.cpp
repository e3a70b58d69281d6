#include "habitat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "habitat/csv.hpp"

namespace habitat {

ConfusionMatrix::ConfusionMatrix(int num_classes) : k_(num_classes) {
    if (num_classes <= 0) throw std::runtime_error("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(k_) * k_, 0);
}

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::false_positives(int cls) const {
    std::uint64_t sum = 0;
    for (int r = 0; r < k_; ++r) {
        if (r != cls) sum += at(r, cls);
    }
    return sum;
}

std::uint64_t ConfusionMatrix::false_negatives(int cls) const {
    std::uint64_t sum = 0;
    for (int p = 0; p < k_; ++p) {
        if (p != cls) sum += at(cls, p);
    }
    return sum;
}

std::uint64_t ConfusionMatrix::support(int cls) const {
    std::uint64_t sum = 0;
    for (int p = 0; p < k_; ++p) sum += at(cls, p);
    return sum;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw std::runtime_error("confusion matrix class count mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

void ConfusionMatrix::to_csv(const std::string& path) const {
    std::vector<csv::Row> rows;
    csv::Row header{"ref\\pred"};
    for (int p = 0; p < k_; ++p) header.push_back(std::to_string(p));
    rows.push_back(std::move(header));
    for (int r = 0; r < k_; ++r) {
        csv::Row row{std::to_string(r)};
        for (int p = 0; p < k_; ++p) row.push_back(std::to_string(at(r, p)));
        rows.push_back(std::move(row));
    }
    csv::write_file(path, rows);
}

ConfusionMatrix ConfusionMatrix::from_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.size() < 2) throw std::runtime_error("bad confusion CSV: " + path);
    const int k = static_cast<int>(rows[0].size()) - 1;
    ConfusionMatrix c(k);
    for (int r = 0; r < k; ++r) {
        const csv::Row& row = rows[r + 1];
        if (static_cast<int>(row.size()) != k + 1)
            throw std::runtime_error("bad confusion CSV row in " + path);
        for (int p = 0; p < k; ++p) c.add(r, p, std::stoull(row[p + 1]));
    }
    return c;
}

ConfusionMatrix accumulate(const GeoGrid& pred, const GeoGrid& ref, int num_classes,
                           const GeoGrid* mask) {
    require_co_registered(pred, ref);
    if (mask) require_co_registered(pred, *mask);
    if (pred.bands.size() != 1 || ref.bands.size() != 1)
        throw std::runtime_error("accumulate expects single-band grids");
    const Band& pb = pred.bands[0];
    const Band& rb = ref.bands[0];
    const Band* mb = mask ? &mask->bands.at(0) : nullptr;

    ConfusionMatrix c(num_classes);
    for (std::size_t i = 0; i < pb.values.size(); ++i) {
        if (mb && mb->is_nodata(mb->values[i])) continue;
        const double pv = pb.values[i];
        const double rv = rb.values[i];
        if (pb.is_nodata(pv) || rb.is_nodata(rv)) continue;
        const int p = static_cast<int>(pv);
        const int r = static_cast<int>(rv);
        if (p < 0 || p >= num_classes || r < 0 || r >= num_classes)
            throw std::runtime_error("label outside scheme: pred=" + std::to_string(p) +
                                     " ref=" + std::to_string(r));
        c.add(r, p);
    }
    return c;
}

ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    ConfusionMatrix out = a;
    out.merge(b);
    return out;
}

std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& c) {
    std::vector<std::optional<double>> out(c.num_classes());
    for (int k = 0; k < c.num_classes(); ++k) {
        const std::uint64_t tp = c.true_positives(k);
        const std::uint64_t uni = tp + c.false_positives(k) + c.false_negatives(k);
        if (uni > 0) out[k] = static_cast<double>(tp) / static_cast<double>(uni);
    }
    return out;
}

std::vector<std::optional<double>> per_class_f1(const ConfusionMatrix& c) {
    std::vector<std::optional<double>> out(c.num_classes());
    for (int k = 0; k < c.num_classes(); ++k) {
        const std::uint64_t tp = c.true_positives(k);
        const std::uint64_t denom = 2 * tp + c.false_positives(k) + c.false_negatives(k);
        if (denom > 0) out[k] = 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return out;
}

std::vector<std::optional<double>> per_class_precision(const ConfusionMatrix& c) {
    std::vector<std::optional<double>> out(c.num_classes());
    for (int k = 0; k < c.num_classes(); ++k) {
        const std::uint64_t tp = c.true_positives(k);
        const std::uint64_t predicted = tp + c.false_positives(k);
        if (predicted > 0) out[k] = static_cast<double>(tp) / static_cast<double>(predicted);
    }
    return out;
}

std::vector<std::optional<double>> per_class_recall(const ConfusionMatrix& c) {
    std::vector<std::optional<double>> out(c.num_classes());
    for (int k = 0; k < c.num_classes(); ++k) {
        const std::uint64_t tp = c.true_positives(k);
        const std::uint64_t supp = tp + c.false_negatives(k);
        if (supp > 0) out[k] = static_cast<double>(tp) / static_cast<double>(supp);
    }
    return out;
}

double overall_accuracy(const ConfusionMatrix& c) {
    const std::uint64_t total = c.total();
    if (total == 0) throw std::runtime_error("overall_accuracy of an empty matrix");
    std::uint64_t trace = 0;
    for (int k = 0; k < c.num_classes(); ++k) trace += c.true_positives(k);
    return static_cast<double>(trace) / static_cast<double>(total);
}

double macro_average(const std::vector<std::optional<double>>& values, UndefinedPolicy policy) {
    double sum = 0.0;
    int count = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++count;
        } else if (policy == UndefinedPolicy::Zero) {
            ++count;
        }
    }
    if (count == 0) throw std::runtime_error("macro_average: every class is undefined");
    return sum / count;
}

MetricReport report(const ConfusionMatrix& c, const ClassScheme& scheme, UndefinedPolicy policy) {
    if (scheme.size() != c.num_classes())
        throw std::runtime_error("scheme size does not match confusion matrix");
    MetricReport rep;
    rep.undefined_policy = policy;
    rep.total_pixels = c.total();
    rep.overall_accuracy = overall_accuracy(c);

    const auto iou = per_class_iou(c);
    const auto f1 = per_class_f1(c);
    const auto precision = per_class_precision(c);
    const auto recall = per_class_recall(c);
    rep.macro_iou = macro_average(iou, policy);
    rep.macro_f1 = macro_average(f1, policy);
    rep.macro_recall = macro_average(recall, policy);

    for (int k = 0; k < c.num_classes(); ++k) {
        PerClassMetrics m;
        m.class_id = k;
        m.name = scheme.info(k).name;
        m.iou = iou[k];
        m.f1 = f1[k];
        m.precision = precision[k];
        m.recall = recall[k];
        m.support = c.support(k);
        m.frequency_percent = rep.total_pixels == 0
                                  ? 0.0
                                  : 100.0 * static_cast<double>(m.support) /
                                        static_cast<double>(rep.total_pixels);
        rep.per_class.push_back(std::move(m));
    }
    return rep;
}

namespace {

nlohmann::ordered_json metric_or_null(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::string format_metric(const std::optional<double>& v) {
    if (!v) return "undefined";
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << *v;
    return os.str();
}

std::string format_percent(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

nlohmann::ordered_json report_to_json(const MetricReport& rep) {
    nlohmann::ordered_json j;
    j["overall_accuracy"] = rep.overall_accuracy;
    j["macro_iou"] = rep.macro_iou;
    j["macro_f1"] = rep.macro_f1;
    j["macro_recall"] = rep.macro_recall;
    j["total_pixels"] = rep.total_pixels;
    j["undefined_policy"] = rep.undefined_policy == UndefinedPolicy::Exclude ? "exclude" : "zero";
    j["per_class"] = nlohmann::ordered_json::array();
    for (const PerClassMetrics& m : rep.per_class) {
        nlohmann::ordered_json c;
        c["class_id"] = m.class_id;
        c["name"] = m.name;
        c["iou"] = metric_or_null(m.iou);
        c["f1"] = metric_or_null(m.f1);
        c["precision"] = metric_or_null(m.precision);
        c["recall"] = metric_or_null(m.recall);
        c["support"] = m.support;
        c["class_frequency_percent"] = m.frequency_percent;
        j["per_class"].push_back(std::move(c));
    }
    return j;
}

} // namespace

void write_report_json(const std::vector<std::pair<std::string, MetricReport>>& sections,
                       const std::string& path) {
    nlohmann::ordered_json j;
    for (const auto& [name, rep] : sections) j[name] = report_to_json(rep);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("report write failed: " + path);
}

void write_report_csv(const std::vector<std::pair<std::string, MetricReport>>& sections,
                      const std::string& path) {
    std::vector<csv::Row> rows{{"task", "row", "class_id", "name", "recall", "precision", "iou",
                                "f1", "support", "class_frequency_percent"}};
    for (const auto& [task, rep] : sections) {
        for (const PerClassMetrics& m : rep.per_class) {
            rows.push_back({task, "class", std::to_string(m.class_id), m.name,
                            format_metric(m.recall), format_metric(m.precision),
                            format_metric(m.iou), format_metric(m.f1),
                            std::to_string(m.support), format_percent(m.frequency_percent)});
        }
        rows.push_back({task, "macro", "", "", format_metric(rep.macro_recall), "",
                        format_metric(rep.macro_iou), format_metric(rep.macro_f1), "", ""});
        rows.push_back({task, "overall_accuracy", "", "", format_metric(rep.overall_accuracy), "",
                        "", "", std::to_string(rep.total_pixels), ""});
    }
    csv::write_file(path, rows);
}

ClassScheme binary_scheme() {
    return ClassScheme({{0, "No change", {}}, {1, "Change", {}}});
}

} // namespace habitat
