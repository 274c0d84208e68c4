#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "speedclust/errors.hpp"
#include "speedclust/pipeline.hpp"
#include "speedclust/text.hpp"

namespace speedclust {

namespace {

using text::format_double;
using text::split_csv;
using text::trim;

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

bool read_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) return true;
    }
    return false;
}

// Parses exactly `width` digits starting at pos.
std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t width) {
    if (pos + width > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

} // namespace

std::optional<std::size_t> timestamp_to_bucket(std::string_view ts, const BucketGrid& grid, int utc_offset_minutes) {
    using namespace std::chrono;
    ts = trim(ts);
    const auto y = digits(ts, 0, 4), mo = digits(ts, 5, 2), d = digits(ts, 8, 2);
    const auto h = digits(ts, 11, 2), mi = digits(ts, 14, 2);
    if (!y || !mo || !d || !h || !mi || ts[4] != '-' || ts[7] != '-' || (ts[10] != 'T' && ts[10] != ' ') ||
        ts[13] != ':') {
        return std::nullopt;
    }
    std::size_t pos = 16;
    if (pos < ts.size() && ts[pos] == ':') {
        if (!digits(ts, pos + 1, 2)) return std::nullopt;
        pos += 3;
        if (pos < ts.size() && ts[pos] == '.') {
            ++pos;
            while (pos < ts.size() && ts[pos] >= '0' && ts[pos] <= '9') ++pos;
        }
    }
    int zone_minutes = 0;
    if (pos < ts.size()) {
        if (ts[pos] == 'Z' && pos + 1 == ts.size()) {
            // UTC
        } else if ((ts[pos] == '+' || ts[pos] == '-') && ts.size() == pos + 6 && ts[pos + 3] == ':') {
            const auto zh = digits(ts, pos + 1, 2), zm = digits(ts, pos + 4, 2);
            if (!zh || !zm) return std::nullopt;
            zone_minutes = (ts[pos] == '-' ? -1 : 1) * (*zh * 60 + *zm);
        } else {
            return std::nullopt;
        }
    }
    const year_month_day date{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
    if (!date.ok() || *h > 23 || *mi > 59) return std::nullopt;

    const auto utc = sys_days{date} + hours{*h} + minutes{*mi} - minutes{zone_minutes};
    const auto local = utc + minutes{utc_offset_minutes};
    const auto local_day = floor<days>(local);
    const int weekday_index = static_cast<int>(weekday{local_day}.iso_encoding()) - 1;
    const int minute_of_day = static_cast<int>(duration_cast<minutes>(local - local_day).count());
    return grid.bucket_at(weekday_index, minute_of_day);
}

std::vector<RawRecord> read_records_csv(std::istream& in, const BucketGrid& grid, const RecordReadOptions& opts,
                                        std::string_view source) {
    const std::string src(source);
    std::string line;
    std::size_t line_no = 0;
    if (!read_data_line(in, line, line_no)) throw ParseError(src, 1, "missing header");
    const auto header = split_csv(line);
    bool timestamps = false;
    if (header.size() == 3 && header[0] == "street_id" && header[2] == "speed_kmh" &&
        (header[1] == "bucket_index" || header[1] == "timestamp_iso8601")) {
        timestamps = header[1] == "timestamp_iso8601";
    } else {
        throw ParseError(src, line_no,
                         "expected header street_id,bucket_index,speed_kmh or street_id,timestamp_iso8601,speed_kmh");
    }

    std::vector<RawRecord> records;
    while (read_data_line(in, line, line_no)) {
        const auto f = split_csv(line);
        if (f.size() != 3) throw ParseError(src, line_no, "expected 3 fields, got " + std::to_string(f.size()));
        RawRecord r;
        r.street_id = std::string(trim(f[0]));
        if (r.street_id.empty()) throw ParseError(src, line_no, "empty street_id");
        if (timestamps) {
            const auto b = timestamp_to_bucket(f[1], grid, opts.utc_offset_minutes);
            if (!b) throw ParseError(src, line_no, "bad timestamp '" + f[1] + "'");
            r.bucket_index = *b;
        } else {
            const auto b = text::parse_int(f[1]);
            if (!b) throw ParseError(src, line_no, "bad bucket_index '" + f[1] + "'");
            if (*b < 0 || static_cast<std::size_t>(*b) >= grid.buckets_per_week()) {
                throw InvalidBucket(src + ":" + std::to_string(line_no) + ": bucket " + std::to_string(*b) +
                                    " outside grid of " + std::to_string(grid.buckets_per_week()) +
                                    " (street '" + r.street_id + "')");
            }
            r.bucket_index = static_cast<std::size_t>(*b);
        }
        const auto speed = text::parse_double(f[2]);
        if (!speed || !std::isfinite(*speed)) throw ParseError(src, line_no, "bad speed_kmh '" + f[2] + "'");
        r.speed_kmh = *speed;
        records.push_back(std::move(r));
    }
    return records;
}

void write_records_csv(std::ostream& out, std::span<const RawRecord> records) {
    out << "street_id,bucket_index,speed_kmh\n";
    for (const auto& r : records) {
        out << text::csv_field(r.street_id) << ',' << r.bucket_index << ',' << format_double(r.speed_kmh) << '\n';
    }
}

std::vector<AttributeRow> read_attributes_csv(std::istream& in, std::string_view source) {
    const std::string src(source);
    std::string line;
    std::size_t line_no = 0;
    if (!read_data_line(in, line, line_no)) throw ParseError(src, 1, "missing header");
    const auto header = split_csv(line);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return i;
        }
        return std::nullopt;
    };
    const auto id_col = column("street_id");
    if (!id_col) throw ParseError(src, line_no, "header lacks street_id");
    const auto class_col = column("road_class"), speed_col = column("max_speed_kmh"), len_col = column("length_m"),
               avg_col = column("avg_speed_kmh"), name_col = column("name"), county_col = column("county");

    std::vector<AttributeRow> rows;
    while (read_data_line(in, line, line_no)) {
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(src, line_no, "expected " + std::to_string(header.size()) + " fields");
        }
        AttributeRow row;
        row.street_id = std::string(trim(f[*id_col]));
        auto number = [&](std::optional<std::size_t> col, const char* what) -> std::optional<double> {
            if (!col || trim(f[*col]).empty()) return std::nullopt;
            const auto v = text::parse_double(f[*col]);
            if (!v || !std::isfinite(*v) || *v < 0.0) {
                throw ParseError(src, line_no, std::string("bad ") + what + " '" + f[*col] + "'");
            }
            return v;
        };
        if (class_col && !trim(f[*class_col]).empty()) {
            row.road_class = parse_road_class(trim(f[*class_col]));
            if (!row.road_class) throw ParseError(src, line_no, "unknown road_class '" + f[*class_col] + "'");
        }
        row.max_speed_kmh = number(speed_col, "max_speed_kmh");
        if (row.max_speed_kmh && *row.max_speed_kmh <= 0.0) throw ParseError(src, line_no, "max_speed_kmh must be positive");
        row.length_m = number(len_col, "length_m");
        row.avg_speed_kmh = number(avg_col, "avg_speed_kmh");
        if (name_col && !trim(f[*name_col]).empty()) row.name = std::string(trim(f[*name_col]));
        if (county_col && !trim(f[*county_col]).empty()) row.county = std::string(trim(f[*county_col]));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_attributes_csv(std::ostream& out, std::span<const AttributeRow> rows) {
    // The descriptive columns are only written when some row carries them.
    const bool extra = std::any_of(rows.begin(), rows.end(),
                                   [](const AttributeRow& r) { return r.avg_speed_kmh || r.name || r.county; });
    out << "street_id,road_class,max_speed_kmh,length_m" << (extra ? ",avg_speed_kmh,name,county" : "") << '\n';
    for (const auto& r : rows) {
        out << text::csv_field(r.street_id) << ',' << (r.road_class ? to_string(*r.road_class) : "") << ','
            << fmt_opt(r.max_speed_kmh) << ',' << fmt_opt(r.length_m);
        if (extra) {
            out << ',' << fmt_opt(r.avg_speed_kmh) << ',' << text::csv_field(r.name.value_or("")) << ','
                << text::csv_field(r.county.value_or(""));
        }
        out << '\n';
    }
}

// ---- Dataset snapshots --------------------------------------------------------------------------

namespace {
constexpr std::size_t kSnapshotFixedColumns = 8;
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
    out << "street_id,filling_rate,road_class,max_speed_kmh,length_m,avg_speed_kmh,name,county";
    for (std::size_t b = 0; b < dataset.grid.buckets_per_week(); ++b) out << ",b" << b;
    out << '\n';
    for (const auto& p : dataset.profiles) {
        out << text::csv_field(p.street_id) << ',' << format_double(p.filling_rate) << ','
            << (p.road_class ? to_string(*p.road_class) : "") << ',' << fmt_opt(p.max_speed_kmh) << ','
            << fmt_opt(p.length_m) << ',' << fmt_opt(p.avg_speed_kmh) << ','
            << text::csv_field(p.name.value_or("")) << ',' << text::csv_field(p.county.value_or(""));
        for (const auto& v : p.series.values) out << ',' << fmt_opt(v);
        out << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, std::string_view source) {
    const std::string src(source);
    std::string line;
    std::size_t line_no = 0;
    if (!read_data_line(in, line, line_no)) throw ParseError(src, 1, "missing header");
    const auto header = split_csv(line);
    if (header.size() <= kSnapshotFixedColumns || header[0] != "street_id" || header[1] != "filling_rate") {
        throw ParseError(src, line_no, "not a dataset snapshot header");
    }
    const std::size_t width = header.size() - kSnapshotFixedColumns;
    Dataset ds{BucketGrid::with_buckets(width), {}};

    while (read_data_line(in, line, line_no)) {
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(src, line_no, "expected " + std::to_string(header.size()) + " fields");
        }
        StreetProfile p;
        p.street_id = f[0];
        auto number = [&](std::size_t col) -> std::optional<double> {
            if (trim(f[col]).empty()) return std::nullopt;
            const auto v = text::parse_double(f[col]);
            if (!v || !std::isfinite(*v)) throw ParseError(src, line_no, "bad number '" + f[col] + "'");
            return v;
        };
        if (!trim(f[2]).empty()) {
            p.road_class = parse_road_class(f[2]);
            if (!p.road_class) throw ParseError(src, line_no, "unknown road_class '" + f[2] + "'");
        }
        p.max_speed_kmh = number(3);
        p.length_m = number(4);
        p.avg_speed_kmh = number(5);
        if (!f[6].empty()) p.name = f[6];
        if (!f[7].empty()) p.county = f[7];
        p.series.values.resize(width);
        for (std::size_t b = 0; b < width; ++b) p.series.values[b] = number(kSnapshotFixedColumns + b);
        p.filling_rate = filling_rate(p.series);
        ds.profiles.push_back(std::move(p));
    }
    ds.validate();
    return ds;
}

std::string dataset_to_json(const Dataset& dataset) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = kDatasetSchemaVersion;
    j["grid"] = {{"bucket_minutes", dataset.grid.bucket_minutes()},
                 {"buckets_per_week", dataset.grid.buckets_per_week()}};
    ordered_json profiles = ordered_json::array();
    for (const auto& p : dataset.profiles) {
        ordered_json o;
        o["street_id"] = p.street_id;
        o["filling_rate"] = p.filling_rate;
        o["road_class"] = p.road_class ? ordered_json(std::string(to_string(*p.road_class))) : ordered_json(nullptr);
        auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
        o["max_speed_kmh"] = opt(p.max_speed_kmh);
        o["length_m"] = opt(p.length_m);
        o["avg_speed_kmh"] = opt(p.avg_speed_kmh);
        o["name"] = p.name ? ordered_json(*p.name) : ordered_json(nullptr);
        o["county"] = p.county ? ordered_json(*p.county) : ordered_json(nullptr);
        ordered_json values = ordered_json::array();
        for (const auto& v : p.series.values) values.push_back(opt(v));
        o["values"] = std::move(values);
        profiles.push_back(std::move(o));
    }
    j["profiles"] = std::move(profiles);
    return j.dump();
}

Dataset dataset_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("schema_version").get<int>() != kDatasetSchemaVersion) {
            throw DataError("unsupported dataset schema_version");
        }
        Dataset ds{BucketGrid(j.at("grid").at("bucket_minutes").get<int>()), {}};
        auto opt = [](const nlohmann::json& v) -> std::optional<double> {
            if (v.is_null()) return std::nullopt;
            return v.get<double>();
        };
        auto opt_str = [](const nlohmann::json& o, const char* key) -> std::optional<std::string> {
            if (!o.contains(key) || o[key].is_null()) return std::nullopt;
            return o[key].get<std::string>();
        };
        for (const auto& o : j.at("profiles")) {
            StreetProfile p;
            p.street_id = o.at("street_id").get<std::string>();
            if (const auto rc = opt_str(o, "road_class")) {
                p.road_class = parse_road_class(*rc);
                if (!p.road_class) throw DataError("unknown road_class '" + *rc + "'");
            }
            p.max_speed_kmh = o.contains("max_speed_kmh") ? opt(o["max_speed_kmh"]) : std::nullopt;
            p.length_m = o.contains("length_m") ? opt(o["length_m"]) : std::nullopt;
            p.avg_speed_kmh = o.contains("avg_speed_kmh") ? opt(o["avg_speed_kmh"]) : std::nullopt;
            p.name = opt_str(o, "name");
            p.county = opt_str(o, "county");
            for (const auto& v : o.at("values")) p.series.values.push_back(opt(v));
            p.filling_rate = filling_rate(p.series);
            ds.profiles.push_back(std::move(p));
        }
        ds.validate();
        return ds;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed dataset JSON: ") + e.what());
    }
}

namespace {
bool has_suffix(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
} // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    if (has_suffix(path, ".json")) {
        std::ostringstream buf;
        buf << in.rdbuf();
        return dataset_from_json(buf.str());
    }
    return read_dataset_csv(in, path);
}

void save_dataset(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (has_suffix(path, ".json")) {
        out << dataset_to_json(dataset) << '\n';
    } else {
        write_dataset_csv(out, dataset);
    }
}

} // namespace speedclust
