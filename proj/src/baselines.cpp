#include "stopfill/baselines.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "stopfill/rng.hpp"

namespace stopfill::baselines {

namespace {

// Resolves a stop_id to a sequence on the record's trip with the same
// loop-window rule the join uses.
int resolve_sequence(const afc::JoinedRecord& record, const std::string& stop_id) {
    return record.trip->find_stop_sequence(stop_id, record.afc.boarding_ts - afc::kLoopWindowS);
}

std::int64_t absolute_seconds(const Date& d, int ts) {
    return std::int64_t(d.days_since_epoch()) * 86400 + ts;
}

}  // namespace

BaselineResult schedule_based_predict(const afc::JoinedRecord& record) {
    BaselineResult r;
    r.sequence = record.predicted_seq;
    r.stop_id = record.trip->events[size_t(r.sequence) - 1].stop_id;
    return r;
}

std::string HistoryIndex::key(const std::string& card, const std::string& route, int bucket) {
    std::string k;
    k.reserve(card.size() + route.size() + 8);
    k += card;
    k += '\x1f';
    k += route;
    k += '\x1f';
    k += std::to_string(bucket);
    return k;
}

HistoryIndex HistoryIndex::build(std::span<const afc::JoinedRecord> train, int bucket_seconds) {
    if (bucket_seconds <= 0) throw std::invalid_argument("HistoryIndex: bucket_seconds must be > 0");
    HistoryIndex idx;
    idx.bucket_seconds_ = bucket_seconds;
    int buckets_per_day = std::max(1, 86400 / bucket_seconds);
    for (const afc::JoinedRecord& rec : train) {
        if (!rec.afc.boarding_stop_id) continue;
        int bucket = (rec.afc.boarding_ts / bucket_seconds) % buckets_per_day;
        StopUse& use = idx.map_[key(rec.afc.card_id, rec.trip->route_id, bucket)]
                               [*rec.afc.boarding_stop_id];
        ++use.count;
        use.last_seen =
            std::max(use.last_seen, absolute_seconds(rec.afc.service_date, rec.afc.boarding_ts));
    }
    return idx;
}

std::optional<std::string> HistoryIndex::lookup(const std::string& card_id,
                                                const std::string& route_id,
                                                int boarding_ts) const {
    int buckets_per_day = std::max(1, 86400 / bucket_seconds_);
    int bucket = (boarding_ts / bucket_seconds_) % buckets_per_day;
    auto it = map_.find(key(card_id, route_id, bucket));
    if (it == map_.end()) return std::nullopt;
    const std::string* best = nullptr;
    const StopUse* best_use = nullptr;
    for (const auto& [stop, use] : it->second) {
        if (!best || use.count > best_use->count ||
            (use.count == best_use->count && use.last_seen > best_use->last_seen)) {
            best = &stop;
            best_use = &use;
        }
    }
    return *best;
}

BaselineResult history_predict(const afc::JoinedRecord& record, const HistoryIndex& index,
                               const learn::Imputation& ml_fallback) {
    std::optional<std::string> hit =
        index.lookup(record.afc.card_id, record.trip->route_id, record.afc.boarding_ts);
    BaselineResult r;
    if (hit) {
        r.stop_id = *hit;
        r.sequence = resolve_sequence(record, r.stop_id);
    } else {
        r.stop_id = ml_fallback.stop_id;
        r.sequence = ml_fallback.sequence;
        r.used_fallback = true;
    }
    return r;
}

BaselineResult temporal_closeness_predict(const afc::JoinedRecord& record,
                                          std::span<const afc::JoinedRecord> same_trip,
                                          const learn::Imputation& ml_fallback, int threshold_s) {
    const afc::JoinedRecord* best = nullptr;
    int best_diff = threshold_s;
    for (const afc::JoinedRecord& j : same_trip) {
        if (!j.afc.boarding_stop_id) continue;
        int diff = std::abs(j.afc.boarding_ts - record.afc.boarding_ts);
        if (diff < best_diff ||
            (best && diff == best_diff && j.afc.boarding_ts < best->afc.boarding_ts)) {
            best = &j;
            best_diff = diff;
        }
    }
    BaselineResult r;
    if (best) {
        r.stop_id = *best->afc.boarding_stop_id;
        r.sequence = resolve_sequence(record, r.stop_id);
    } else {
        r.stop_id = ml_fallback.stop_id;
        r.sequence = ml_fallback.sequence;
        r.used_fallback = true;
    }
    return r;
}

FrequencyTable FrequencyTable::build(std::span<const afc::JoinedRecord> train) {
    FrequencyTable t;
    std::int64_t n = 0;
    for (const afc::JoinedRecord& rec : train) {
        if (!rec.afc.boarding_stop_id) continue;
        t.mass_[*rec.afc.boarding_stop_id] += 1.0;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("FrequencyTable: no labeled training records");
    for (auto& [stop, m] : t.mass_) m /= double(n);
    return t;
}

double FrequencyTable::mass(const std::string& stop_id) const {
    auto it = mass_.find(stop_id);
    return it == mass_.end() ? 0.0 : it->second;
}

BaselineResult semi_random_predict(const afc::JoinedRecord& record, std::uint64_t record_index,
                                   const FrequencyTable& freq, std::uint64_t seed,
                                   bool restrict_to_trip) {
    Rng rng = SeedSequence(seed).stream(record_index);
    double u = rng.uniform();
    BaselineResult r;
    if (restrict_to_trip) {
        // distinct stops on the trip, in first-appearance order
        std::vector<const std::string*> stops;
        for (const gtfs::StopEvent& ev : record.trip->events) {
            bool seen = false;
            for (const std::string* s : stops)
                if (*s == ev.stop_id) {
                    seen = true;
                    break;
                }
            if (!seen) stops.push_back(&ev.stop_id);
        }
        std::vector<double> mass(stops.size());
        double total = 0.0;
        for (size_t i = 0; i < stops.size(); ++i) {
            mass[i] = freq.mass(*stops[i]);
            total += mass[i];
        }
        if (total <= 0.0) {
            for (double& m : mass) m = 1.0;
            total = double(mass.size());
        }
        double cum = 0.0;
        size_t pick = stops.size() - 1;
        for (size_t i = 0; i < stops.size(); ++i) {
            cum += mass[i] / total;
            if (u < cum) {
                pick = i;
                break;
            }
        }
        r.stop_id = *stops[pick];
    } else {
        double cum = 0.0;
        const std::map<std::string, double>& table = freq.masses();
        r.stop_id = table.rbegin()->first;
        for (const auto& [stop, m] : table) {
            cum += m;
            if (u < cum) {
                r.stop_id = stop;
                break;
            }
        }
    }
    r.sequence = resolve_sequence(record, r.stop_id);
    return r;
}

}  // namespace stopfill::baselines
