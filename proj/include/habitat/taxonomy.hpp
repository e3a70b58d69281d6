#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "habitat/geogrid.hpp"

namespace habitat {

/// Default nodata sentinel for categorical grids produced by this pipeline.
inline constexpr double kLabelNoData = 255.0;

struct ClassInfo {
    int id = 0;
    std::string name;
    std::optional<double> area_ha;
};

/// A label taxonomy: ids contiguous from 0, names unique (duplicates from
/// the source table are disambiguated by appending " #<id>").
class ClassScheme {
public:
    ClassScheme() = default;
    explicit ClassScheme(std::vector<ClassInfo> classes);

    /// CSV columns: id,name[,area_ha]; header row required.
    static ClassScheme from_csv(const std::string& path);
    void to_csv(const std::string& path) const;

    int size() const { return static_cast<int>(classes_.size()); }
    const ClassInfo& info(int id) const;
    const std::vector<ClassInfo>& classes() const { return classes_; }
    bool contains(int id) const { return id >= 0 && id < size(); }

private:
    std::vector<ClassInfo> classes_;
};

enum class RemapDefault { Error, PassThrough, Fixed };

/// source-class-id -> target-class-id lookup with a default policy for
/// values outside the table.
struct RemapTable {
    std::map<int, int> entries;
    RemapDefault default_policy = RemapDefault::Error;
    int fixed_target = 0;

    /// CSV columns: source_id,target_id; header row required.
    static RemapTable from_csv(const std::string& path,
                               RemapDefault policy = RemapDefault::Error,
                               int fixed_target = 0);
    int apply(int source, std::size_t pixel_index) const;
};

/// (from,to) -> transition-category lookup. Identity pairs are always
/// "No change"; unlisted non-identity pairs fall back to "Other Transition".
class TransitionRuleSet {
public:
    TransitionRuleSet() = default;
    TransitionRuleSet(ClassScheme categories, std::map<std::pair<int, int>, int> rules,
                      int num_classes);

    /// categories CSV: category_id,name; rules CSV: from_id,to_id,category_id.
    static TransitionRuleSet from_csv(const std::string& categories_path,
                                      const std::string& rules_path, int num_classes);

    int map_pair(int from_id, int to_id) const;

    const ClassScheme& categories() const { return categories_; }
    int num_classes() const { return num_classes_; }
    int no_change_id() const { return no_change_id_; }
    int fallback_id() const { return fallback_id_; }
    const std::map<std::pair<int, int>, int>& rules() const { return rules_; }

private:
    ClassScheme categories_;
    std::map<std::pair<int, int>, int> rules_;
    int num_classes_ = 0;
    int no_change_id_ = 0;
    int fallback_id_ = 0;
};

/// Per-pixel table lookup; nodata preserved. Unmapped values follow the
/// table's default policy (Error names the value and pixel index).
GeoGrid remap_labels(const GeoGrid& grid, const RemapTable& table);

/// The temporal comparison module: pairwise per-pixel transition mapping.
/// Nodata in either input yields nodata.
GeoGrid build_transition_map(const GeoGrid& labels_t1, const GeoGrid& labels_t2,
                             const TransitionRuleSet& rules);

/// "No change" -> 0, any other category -> 1, nodata preserved.
GeoGrid binarize_change(const GeoGrid& transition, const TransitionRuleSet& rules);

struct AreaStat {
    int class_id;
    std::string name;
    std::uint64_t pixel_count;
    double area_ha;
    double share_percent;
};

/// Pixel-count areas per class: area_ha = count * pixel_size^2 / 1e4.
/// Shares are over non-nodata pixels and sum to 100.
std::vector<AreaStat> area_stats(const GeoGrid& grid, const ClassScheme& scheme);

void write_area_stats_csv(const std::vector<AreaStat>& stats, const std::string& path);

} // namespace habitat
