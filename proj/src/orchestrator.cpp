#include "nicpool/orchestrator.hpp"

#include <algorithm>

namespace nicpool {

FlowTableEntry& TrafficOrchestrator::entry(const std::string& app, const FiveTuple& flow) {
    auto& t = tables_[app];
    auto it = t.find(flow);
    if (it == t.end()) {
        FlowTableEntry e;
        e.flow = flow;
        it = t.emplace(flow, std::move(e)).first;
    }
    return it->second;
}

FlowTableEntry* TrafficOrchestrator::entry_if(const std::string& app, const FiveTuple& flow) {
    auto t = tables_.find(app);
    if (t == tables_.end()) return nullptr;
    auto it = t->second.find(flow);
    return it == t->second.end() ? nullptr : &it->second;
}

static const LaneView* most_available(const std::vector<LaneView>& lanes,
                                      const std::vector<LaneRef>* subset, bool exclude_subset) {
    const LaneView* best = nullptr;
    for (const auto& lv : lanes) {
        if (!lv.accepting) continue;
        bool in_subset =
            subset && std::find(subset->begin(), subset->end(), lv.ref) != subset->end();
        if (subset && !exclude_subset && !in_subset) continue;
        if (subset && exclude_subset && in_subset) continue;
        if (!best || lv.free_slots > best->free_slots) best = &lv;  // ties: first in lane order
    }
    return best;
}

RouteDecision TrafficOrchestrator::route_ingress(const std::string& app, const FiveTuple& flow,
                                                 const std::vector<LaneView>& lanes,
                                                 double high_watermark, SimTime now) {
    RouteDecision dec;
    if (lanes.empty()) {
        drops++;
        return dec;  // NoPipeline
    }
    auto& t = tables_[app];
    auto it = t.find(flow);
    if (it == t.end()) {
        const LaneView* lv = most_available(lanes, nullptr, false);
        if (!lv || lv->free_slots <= 0) {
            drops++;
            return dec;
        }
        FlowTableEntry e;
        e.flow = flow;
        e.pinned.push_back(lv->ref);
        e.load_share[lv->ref]++;
        e.last_seen = now;
        t.emplace(flow, std::move(e));
        dec.lane = lv->ref;
        dec.nic = lv->nic;
        dec.new_entry = true;
        redirections++;
        return dec;
    }

    FlowTableEntry& e = it->second;
    e.last_seen = now;

    // pinned lane with the most available capacity
    const LaneView* pick = most_available(lanes, &e.pinned, false);
    double occupancy = 0.0;
    if (pick && pick->capacity > 0)
        occupancy = 1.0 - static_cast<double>(pick->free_slots) / pick->capacity;
    if (!pick || occupancy >= high_watermark) {
        // spill only once the pinned pipeline hits its capacity limit
        const LaneView* fresh = most_available(lanes, &e.pinned, true);
        if (fresh && fresh->free_slots > 0 &&
            (!pick || fresh->free_slots > pick->free_slots)) {
            e.pinned.push_back(fresh->ref);
            pick = fresh;
            dec.spilled = true;
        }
    }
    if (!pick || pick->free_slots <= 0) {
        drops++;
        return dec;  // all ingress full
    }
    e.load_share[pick->ref]++;
    dec.lane = pick->ref;
    dec.nic = pick->nic;
    redirections++;
    return dec;
}

RouteDecision TrafficOrchestrator::route_range(const std::string& app, const FiveTuple& flow,
                                               int group, int range,
                                               const std::vector<LaneView>& lanes, SimTime now) {
    RouteDecision dec;
    FlowTableEntry& e = entry(app, flow);
    e.last_seen = now;
    auto key = std::make_pair(group, range);
    auto pin = e.range_pins.find(key);
    if (pin != e.range_pins.end()) {
        for (const auto& lv : lanes) {
            if (lv.ref == pin->second && lv.accepting) {
                dec.lane = lv.ref;
                dec.nic = lv.nic;
                e.load_share[lv.ref]++;
                redirections++;
                return dec;
            }
        }
        e.range_pins.erase(pin);  // pinned lane is gone; re-pin below
    }
    const LaneView* lv = most_available(lanes, nullptr, false);
    if (!lv || lv->free_slots <= 0) {
        drops++;
        return dec;
    }
    e.range_pins[key] = lv->ref;
    e.load_share[lv->ref]++;
    dec.lane = lv->ref;
    dec.nic = lv->nic;
    dec.new_entry = true;
    redirections++;
    return dec;
}

void TrafficOrchestrator::forget_lane(const std::string& app, const LaneRef& lane) {
    auto t = tables_.find(app);
    if (t == tables_.end()) return;
    for (auto& [flow, e] : t->second) {
        std::erase(e.pinned, lane);
        for (auto it = e.range_pins.begin(); it != e.range_pins.end();) {
            if (it->second == lane)
                it = e.range_pins.erase(it);
            else
                ++it;
        }
    }
}

}  // namespace nicpool
