#include "nicpool/dataplane.hpp"

#include <algorithm>

namespace nicpool {

LatencySummary summarize_latency(std::vector<SimTime> samples, std::int64_t count, SimTime sum) {
    LatencySummary out;
    out.count = count;
    if (samples.empty() || count == 0) return out;
    out.avg_us = time_to_us(sum) / static_cast<double>(count);
    std::sort(samples.begin(), samples.end());
    auto pct = [&](double p) {
        size_t idx = static_cast<size_t>(p * static_cast<double>(samples.size() - 1));
        return time_to_us(samples[idx]);
    };
    out.p50_us = pct(0.50);
    out.p90_us = pct(0.90);
    out.p99_us = pct(0.99);
    return out;
}

std::vector<EgressAggregator::Release> EgressAggregator::advance(FlowState& fs, SimTime now,
                                                                 AppStats& stats) {
    std::vector<Release> out;
    while (true) {
        auto hit = fs.held.find(fs.next_seq);
        if (hit != fs.held.end()) {
            std::int64_t batch = fs.held_batch[fs.next_seq];
            if (batch < fs.last_released_batch) stats.order_violations++;
            fs.last_released_batch = std::max(fs.last_released_batch, batch);
            out.push_back(Release{std::move(hit->second), now});
            fs.held.erase(hit);
            fs.held_batch.erase(fs.next_seq);
            fs.next_seq++;
            continue;
        }
        auto freed = fs.freed.find(fs.next_seq);
        if (freed != fs.freed.end()) {
            fs.freed.erase(freed);
            fs.next_seq++;
            continue;
        }
        break;
    }
    return out;
}

std::vector<EgressAggregator::Release> EgressAggregator::on_delivered(Packet&& pkt, SimTime now,
                                                                      AppStats& stats) {
    FlowState& fs = flows_[pkt.flow];
    if (pkt.flow_seq < fs.next_seq || fs.held.count(pkt.flow_seq) || fs.freed.count(pkt.flow_seq)) {
        stats.duplicates++;  // replayed copy of something already accounted for
        return {};
    }
    fs.held_batch[pkt.flow_seq] = pkt.batch_seq;
    fs.held.emplace(pkt.flow_seq, std::move(pkt));
    return advance(fs, now, stats);
}

std::vector<EgressAggregator::Release> EgressAggregator::on_dropped(const FiveTuple& flow,
                                                                    std::int64_t flow_seq,
                                                                    SimTime now, AppStats& stats) {
    FlowState& fs = flows_[flow];
    if (flow_seq < fs.next_seq) return {};  // already released; nothing to free
    fs.held.erase(flow_seq);                // dropped copy supersedes a held duplicate
    fs.held_batch.erase(flow_seq);
    fs.freed.insert(flow_seq);
    return advance(fs, now, stats);
}

bool EgressAggregator::is_delivered(const FiveTuple& flow, std::int64_t flow_seq) const {
    auto it = flows_.find(flow);
    if (it == flows_.end()) return false;
    const FlowState& fs = it->second;
    return flow_seq < fs.next_seq && !fs.freed.count(flow_seq);
}

std::int64_t EgressAggregator::held_count() const {
    std::int64_t n = 0;
    for (auto& [flow, fs] : flows_) n += static_cast<std::int64_t>(fs.held.size());
    return n;
}

}  // namespace nicpool
