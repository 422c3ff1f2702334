#include "stopfill/afc.hpp"

#include <cmath>
#include <stdexcept>

#include "stopfill/csv.hpp"
#include "json.hpp"

namespace stopfill::afc {

namespace {

const std::vector<std::string> kColumns = {"card_id",          "trip_id",     "service_date",
                                           "boarding_ts",      "boarding_stop_id",
                                           "operator_id",      "traveler_type"};

int parse_boarding_ts(const std::string& text) {
    if (text.find(':') != std::string::npos) return parse_clock_seconds(text);
    try {
        size_t pos = 0;
        int v = std::stoi(text, &pos);
        if (pos != text.size() || v < 0) return -1;
        return v;
    } catch (...) {
        return -1;
    }
}

}  // namespace

std::int64_t DropReport::total_dropped() const {
    std::int64_t n = 0;
    for (const auto& [reason, count] : dropped) n += count;
    return n;
}

std::string DropReport::to_json() const {
    nlohmann::json j;
    j["input"] = input;
    j["retained"] = retained;
    j["retained_fraction"] = retained_fraction();
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [reason, count] : dropped) d[reason] = count;
    j["dropped"] = d;
    return j.dump(2);
}

std::vector<AfcRecord> load_afc(const std::filesystem::path& csv_path, LoadStats* stats) {
    CsvReader r(csv_path);
    if (!r.ok()) throw std::runtime_error("cannot open AFC file: " + csv_path.string());
    for (const std::string& name : kColumns)
        if (!r.has(name))
            throw std::runtime_error("AFC file missing required column '" + name + "'");

    int c_card = r.col("card_id"), c_trip = r.col("trip_id"), c_date = r.col("service_date");
    int c_ts = r.col("boarding_ts"), c_stop = r.col("boarding_stop_id");
    int c_op = r.col("operator_id"), c_type = r.col("traveler_type");

    std::vector<AfcRecord> out;
    while (r.next()) {
        AfcRecord rec;
        rec.card_id = r.field(c_card);
        rec.trip_id = r.field(c_trip);
        rec.service_date = parse_date(r.field(c_date));
        rec.boarding_ts = parse_boarding_ts(r.field(c_ts));
        if (!rec.service_date.valid() || rec.boarding_ts < 0) {
            if (stats) ++stats->malformed;
            continue;
        }
        if (!r.field(c_stop).empty()) rec.boarding_stop_id = r.field(c_stop);
        rec.operator_id = r.field(c_op);
        if (!r.field(c_type).empty()) rec.traveler_type = r.field(c_type);
        out.push_back(std::move(rec));
        if (stats) ++stats->parsed;
    }
    return out;
}

void write_afc(const std::filesystem::path& csv_path, const std::vector<AfcRecord>& records) {
    CsvWriter w(csv_path);
    w.write_row(kColumns);
    for (const AfcRecord& rec : records) {
        w.write_row({rec.card_id, rec.trip_id, rec.service_date.to_string(),
                     std::to_string(rec.boarding_ts), rec.boarding_stop_id.value_or(""),
                     rec.operator_id, rec.traveler_type.value_or("")});
    }
}

std::pair<std::vector<JoinedRecord>, DropReport> preprocess_and_join(
    const std::vector<AfcRecord>& records, const gtfs::GtfsFeed& feed, JoinMode mode) {
    std::vector<JoinedRecord> joined;
    DropReport report;
    report.input = std::int64_t(records.size());

    for (size_t i = 0; i < records.size(); ++i) {
        const AfcRecord& rec = records[i];
        if (rec.trip_id.empty()) {
            ++report.dropped[kDropMissingTripId];
            continue;
        }
        if (mode == JoinMode::train && !rec.boarding_stop_id) {
            ++report.dropped[kDropMissingStop];
            continue;
        }
        const gtfs::TripSchedule* trip = feed.find_trip(rec.trip_id, rec.service_date);
        if (!trip) {
            ++report.dropped[kDropUnmatchedTrip];
            continue;
        }
        JoinedRecord j;
        j.afc = rec;
        j.trip = trip;
        j.input_index = std::int64_t(i);
        if (rec.boarding_stop_id) {
            int seq = trip->find_stop_sequence(*rec.boarding_stop_id,
                                               rec.boarding_ts - kLoopWindowS);
            if (seq < 0) {
                ++report.dropped[kDropStopNotOnTrip];
                continue;
            }
            j.actual_seq = seq;
            j.loop_ambiguous = trip->stop_repeats(*rec.boarding_stop_id);
        }
        j.predicted_seq = gtfs::scheduled_position(*trip, rec.boarding_ts);
        joined.push_back(std::move(j));
        ++report.retained;
    }
    return {std::move(joined), std::move(report)};
}

std::map<std::string, std::vector<double>> missingness_by_operator(
    const std::vector<AfcRecord>& records) {
    // (operator, trip instance) -> (missing, total)
    std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> per_trip;
    for (const AfcRecord& rec : records) {
        auto& [missing, total] = per_trip[{rec.operator_id,
                                           rec.trip_id + "@" + rec.service_date.to_string()}];
        if (!rec.boarding_stop_id) ++missing;
        ++total;
    }
    std::map<std::string, std::vector<double>> out;
    for (const auto& [key, counts] : per_trip)
        out[key.first].push_back(double(counts.first) / double(counts.second));
    return out;
}

void Histogram::add(double value) {
    ++bins[long(std::floor(value / bin_width))];
    ++n;
    sum += value;
}

std::string Histogram::to_json() const {
    nlohmann::json j;
    j["bin_width"] = bin_width;
    j["n"] = n;
    j["mean"] = mean();
    nlohmann::json b = nlohmann::json::object();
    for (const auto& [bin, count] : bins) b[std::to_string(bin * long(bin_width))] = count;
    j["bins"] = b;
    return j.dump(2);
}

Histogram lateness_density(const std::vector<JoinedRecord>& joined, double bin_width_s) {
    Histogram h;
    h.bin_width = bin_width_s;
    for (const JoinedRecord& j : joined)
        if (j.actual_seq) h.add(double(j.lateness_s()));
    return h;
}

}  // namespace stopfill::afc
