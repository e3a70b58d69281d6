#include "habitat/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "habitat/csv.hpp"

namespace habitat {

namespace {

int parse_int(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw std::runtime_error("expected integer, got '" + s + "' in " + context);
    }
}

void require_header(const std::vector<csv::Row>& rows, const std::vector<std::string>& expected,
                    std::size_t min_cols, const std::string& path) {
    if (rows.empty()) throw std::runtime_error("empty CSV: " + path);
    const csv::Row& header = rows.front();
    if (header.size() < min_cols)
        throw std::runtime_error("missing header columns in " + path);
    for (std::size_t i = 0; i < min_cols; ++i) {
        if (header[i] != expected[i])
            throw std::runtime_error("expected header column '" + expected[i] + "', got '" +
                                     header[i] + "' in " + path);
    }
}

} // namespace

ClassScheme::ClassScheme(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        if (classes_[i].id != static_cast<int>(i))
            throw std::runtime_error("class ids must be contiguous from 0 (got " +
                                     std::to_string(classes_[i].id) + " at position " +
                                     std::to_string(i) + ")");
    }
    // Disambiguate duplicate names by appending the id.
    std::set<std::string> seen;
    for (ClassInfo& info : classes_) {
        if (!seen.insert(info.name).second) {
            info.name += " #" + std::to_string(info.id);
            if (!seen.insert(info.name).second)
                throw std::runtime_error("cannot disambiguate class name: " + info.name);
        }
    }
}

ClassScheme ClassScheme::from_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    require_header(rows, {"id", "name"}, 2, path);
    std::vector<ClassInfo> classes;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2) throw std::runtime_error("short row in " + path);
        ClassInfo info;
        info.id = parse_int(rows[i][0], path);
        info.name = rows[i][1];
        if (rows[i].size() >= 3 && !rows[i][2].empty()) info.area_ha = std::stod(rows[i][2]);
        classes.push_back(std::move(info));
    }
    return ClassScheme(std::move(classes));
}

void ClassScheme::to_csv(const std::string& path) const {
    std::vector<csv::Row> rows{{"id", "name", "area_ha"}};
    for (const ClassInfo& info : classes_) {
        std::ostringstream area;
        if (info.area_ha) {
            area.precision(17);
            area << *info.area_ha;
        }
        rows.push_back({std::to_string(info.id), info.name, area.str()});
    }
    csv::write_file(path, rows);
}

const ClassInfo& ClassScheme::info(int id) const {
    if (!contains(id)) throw std::runtime_error("class id out of range: " + std::to_string(id));
    return classes_[id];
}

RemapTable RemapTable::from_csv(const std::string& path, RemapDefault policy, int fixed_target) {
    const auto rows = csv::read_file(path);
    require_header(rows, {"source_id", "target_id"}, 2, path);
    RemapTable table;
    table.default_policy = policy;
    table.fixed_target = fixed_target;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 2) throw std::runtime_error("short row in " + path);
        const int src = parse_int(rows[i][0], path);
        const int dst = parse_int(rows[i][1], path);
        if (!table.entries.emplace(src, dst).second)
            throw std::runtime_error("duplicate source id " + std::to_string(src) + " in " + path);
    }
    return table;
}

int RemapTable::apply(int source, std::size_t pixel_index) const {
    auto it = entries.find(source);
    if (it != entries.end()) return it->second;
    switch (default_policy) {
        case RemapDefault::PassThrough: return source;
        case RemapDefault::Fixed: return fixed_target;
        case RemapDefault::Error:
            throw std::runtime_error("unmapped class value " + std::to_string(source) +
                                     " at pixel index " + std::to_string(pixel_index));
    }
    return source;
}

TransitionRuleSet::TransitionRuleSet(ClassScheme categories,
                                     std::map<std::pair<int, int>, int> rules, int num_classes)
    : categories_(std::move(categories)), rules_(std::move(rules)), num_classes_(num_classes) {
    no_change_id_ = -1;
    fallback_id_ = -1;
    for (const ClassInfo& info : categories_.classes()) {
        if (info.name == "No change") no_change_id_ = info.id;
        if (info.name == "Other Transition") fallback_id_ = info.id;
    }
    if (no_change_id_ < 0)
        throw std::runtime_error("transition categories must include 'No change'");
    if (fallback_id_ < 0)
        throw std::runtime_error("transition categories must include 'Other Transition'");
    for (const auto& [pair, category] : rules_) {
        if (pair.first < 0 || pair.first >= num_classes_ || pair.second < 0 ||
            pair.second >= num_classes_)
            throw std::runtime_error("transition rule references class outside scheme: (" +
                                     std::to_string(pair.first) + "," +
                                     std::to_string(pair.second) + ")");
        if (!categories_.contains(category))
            throw std::runtime_error("transition rule references unknown category " +
                                     std::to_string(category));
        if (pair.first == pair.second && category != no_change_id_)
            throw std::runtime_error("identity pair (" + std::to_string(pair.first) + "," +
                                     std::to_string(pair.first) + ") must map to 'No change'");
    }
}

TransitionRuleSet TransitionRuleSet::from_csv(const std::string& categories_path,
                                              const std::string& rules_path, int num_classes) {
    const auto cat_rows = csv::read_file(categories_path);
    require_header(cat_rows, {"category_id", "name"}, 2, categories_path);
    std::vector<ClassInfo> categories;
    for (std::size_t i = 1; i < cat_rows.size(); ++i) {
        if (cat_rows[i].size() < 2) throw std::runtime_error("short row in " + categories_path);
        categories.push_back({parse_int(cat_rows[i][0], categories_path), cat_rows[i][1], {}});
    }

    const auto rule_rows = csv::read_file(rules_path);
    require_header(rule_rows, {"from_id", "to_id", "category_id"}, 3, rules_path);
    std::map<std::pair<int, int>, int> rules;
    for (std::size_t i = 1; i < rule_rows.size(); ++i) {
        if (rule_rows[i].size() < 3) throw std::runtime_error("short row in " + rules_path);
        const int from = parse_int(rule_rows[i][0], rules_path);
        const int to = parse_int(rule_rows[i][1], rules_path);
        const int cat = parse_int(rule_rows[i][2], rules_path);
        if (!rules.emplace(std::make_pair(from, to), cat).second)
            throw std::runtime_error("duplicate rule for pair (" + std::to_string(from) + "," +
                                     std::to_string(to) + ") in " + rules_path);
    }
    return TransitionRuleSet(ClassScheme(std::move(categories)), std::move(rules), num_classes);
}

int TransitionRuleSet::map_pair(int from_id, int to_id) const {
    if (from_id < 0 || from_id >= num_classes_)
        throw std::runtime_error("invalid class id: " + std::to_string(from_id));
    if (to_id < 0 || to_id >= num_classes_)
        throw std::runtime_error("invalid class id: " + std::to_string(to_id));
    if (from_id == to_id) return no_change_id_;
    auto it = rules_.find({from_id, to_id});
    return it == rules_.end() ? fallback_id_ : it->second;
}

namespace {

const Band& categorical_band(const GeoGrid& grid, const char* what) {
    if (grid.bands.size() != 1)
        throw std::runtime_error(std::string(what) + " expects a single-band grid");
    if (grid.bands[0].kind != BandKind::Categorical)
        throw std::runtime_error(std::string(what) + " expects a categorical band");
    return grid.bands[0];
}

GeoGrid categorical_like(const GeoGrid& src, Tag tag) {
    GeoGrid out(src.width, src.height, src.pixel_size, src.origin_x, src.origin_y, src.epsg);
    Band& band = out.add_band(BandKind::Categorical, tag, kLabelNoData);
    band.nodata = kLabelNoData;
    return out;
}

} // namespace

GeoGrid remap_labels(const GeoGrid& grid, const RemapTable& table) {
    const Band& src = categorical_band(grid, "remap_labels");
    GeoGrid out = categorical_like(grid, src.tag);
    Band& dst = out.bands[0];
    if (src.nodata) dst.nodata = src.nodata;
    dst.values.assign(src.values.size(), dst.nodata ? *dst.nodata : kLabelNoData);
    for (std::size_t i = 0; i < src.values.size(); ++i) {
        const double v = src.values[i];
        if (src.is_nodata(v)) continue;
        dst.values[i] = table.apply(static_cast<int>(v), i);
    }
    return out;
}

GeoGrid build_transition_map(const GeoGrid& labels_t1, const GeoGrid& labels_t2,
                             const TransitionRuleSet& rules) {
    require_co_registered(labels_t1, labels_t2);
    const Band& b1 = categorical_band(labels_t1, "build_transition_map");
    const Band& b2 = categorical_band(labels_t2, "build_transition_map");

    GeoGrid out = categorical_like(labels_t1, Tag::Label);
    Band& dst = out.bands[0];
    for (std::size_t i = 0; i < b1.values.size(); ++i) {
        const double v1 = b1.values[i];
        const double v2 = b2.values[i];
        if (b1.is_nodata(v1) || b2.is_nodata(v2)) continue;
        dst.values[i] = rules.map_pair(static_cast<int>(v1), static_cast<int>(v2));
    }
    return out;
}

GeoGrid binarize_change(const GeoGrid& transition, const TransitionRuleSet& rules) {
    const Band& src = categorical_band(transition, "binarize_change");
    GeoGrid out = categorical_like(transition, Tag::Label);
    Band& dst = out.bands[0];
    for (std::size_t i = 0; i < src.values.size(); ++i) {
        const double v = src.values[i];
        if (src.is_nodata(v)) continue;
        const int category = static_cast<int>(v);
        if (!rules.categories().contains(category))
            throw std::runtime_error("transition grid value outside category set: " +
                                     std::to_string(category));
        dst.values[i] = category == rules.no_change_id() ? 0.0 : 1.0;
    }
    return out;
}

std::vector<AreaStat> area_stats(const GeoGrid& grid, const ClassScheme& scheme) {
    const Band& band = categorical_band(grid, "area_stats");
    std::vector<std::uint64_t> counts(scheme.size(), 0);
    std::uint64_t total = 0;
    for (double v : band.values) {
        if (band.is_nodata(v)) continue;
        const int id = static_cast<int>(v);
        if (!scheme.contains(id))
            throw std::runtime_error("label " + std::to_string(id) + " outside scheme");
        ++counts[id];
        ++total;
    }
    const double ha_per_pixel = grid.pixel_size * grid.pixel_size / 1e4;
    std::vector<AreaStat> stats;
    stats.reserve(scheme.size());
    for (const ClassInfo& info : scheme.classes()) {
        AreaStat s;
        s.class_id = info.id;
        s.name = info.name;
        s.pixel_count = counts[info.id];
        s.area_ha = static_cast<double>(counts[info.id]) * ha_per_pixel;
        s.share_percent = total == 0 ? 0.0
                                     : 100.0 * static_cast<double>(counts[info.id]) /
                                           static_cast<double>(total);
        stats.push_back(std::move(s));
    }
    return stats;
}

void write_area_stats_csv(const std::vector<AreaStat>& stats, const std::string& path) {
    std::vector<csv::Row> rows{{"class_id", "name", "pixel_count", "area_ha", "share_percent"}};
    for (const AreaStat& s : stats) {
        std::ostringstream area, share;
        area.precision(6);
        area << std::fixed << s.area_ha;
        share.precision(2);
        share << std::fixed << s.share_percent;
        rows.push_back({std::to_string(s.class_id), s.name, std::to_string(s.pixel_count),
                        area.str(), share.str()});
    }
    csv::write_file(path, rows);
}

} // namespace habitat
