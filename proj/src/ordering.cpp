#include "paps/ordering.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace paps {

OcclusionGraph build_occlusion_graph(const AmodalScene& scene) {
    OcclusionGraph g;
    for (const auto& inst : scene.instances) g.nodes.push_back(inst.instance_id);
    for (const auto& a : scene.instances) {
        for (const auto& b : scene.instances) {
            if (a.instance_id == b.instance_id) continue;
            if (a.depth_rank >= b.depth_rank) continue;  // a must be strictly in front
            BinaryMask hidden = b.amodal_mask.set_difference(b.inmodal_mask);
            if (a.amodal_mask.intersects(hidden)) g.edges.emplace_back(a.instance_id, b.instance_id);
        }
    }
    return g;
}

std::map<int, int> assign_layers(const OcclusionGraph& graph, int n_max, int* truncated) {
    if (n_max < 1) throw ConfigError("n_max must be at least 1");
    std::map<int, std::vector<int>> occluders;  // node -> incoming edge sources
    std::map<int, std::vector<int>> outgoing;
    std::map<int, int> indegree;
    for (int v : graph.nodes) {
        occluders[v];
        outgoing[v];
        indegree[v] = 0;
    }
    for (const auto& [u, v] : graph.edges) {
        if (u == v) throw OrderingError("self-occlusion edge at instance " + std::to_string(u));
        if (!indegree.count(u) || !indegree.count(v)) throw OrderingError("edge references unknown node");
        occluders[v].push_back(u);
        outgoing[u].push_back(v);
        ++indegree[v];
    }

    std::map<int, int> layer;
    std::deque<int> ready;
    for (int v : graph.nodes)
        if (indegree[v] == 0) ready.push_back(v);
    std::map<int, int> remaining = indegree;
    int processed = 0;
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop_front();
        ++processed;
        int l = 0;
        for (int u : occluders[v]) l = std::max(l, layer[u] + 1);
        layer[v] = l;
        for (int nxt : outgoing[v])
            if (--remaining[nxt] == 0) ready.push_back(nxt);
    }
    if (processed != static_cast<int>(graph.nodes.size())) {
        // find one cycle among unprocessed nodes to name in the error
        std::vector<int> cyc;
        for (int v : graph.nodes)
            if (!layer.count(v)) {
                int cur = v;
                std::map<int, int> seen;
                while (!seen.count(cur)) {
                    seen[cur] = static_cast<int>(cyc.size());
                    cyc.push_back(cur);
                    int next = -1;
                    for (int u : occluders[cur])
                        if (!layer.count(u)) {
                            next = u;
                            break;
                        }
                    cur = next;
                }
                cyc.erase(cyc.begin(), cyc.begin() + seen[cur]);
                break;
            }
        std::string names;
        for (int v : cyc) names += std::to_string(v) + " ";
        throw OrderingError("occlusion cycle among instances: " + names);
    }

    int n_trunc = 0;
    for (auto& [v, l] : layer)
        if (l >= n_max) {
            l = n_max - 1;
            ++n_trunc;
        }
    if (truncated) *truncated = n_trunc;
    return layer;
}

OrderingStack build_ordering_stack(const AmodalScene& scene, const std::map<int, int>& assignment,
                                   int n_layers) {
    OrderingStack s;
    s.n_layers = n_layers;
    s.h = scene.h;
    s.w = scene.w;
    s.layer_masks.assign(n_layers, BinaryMask(scene.h, scene.w));
    s.layer_offsets = Array3(n_layers * 2, scene.h, scene.w);
    s.layer_valid = Array3(n_layers, scene.h, scene.w);
    s.layer_assignment = assignment;

    for (const auto& inst : scene.instances) {
        auto it = assignment.find(inst.instance_id);
        if (it == assignment.end())
            throw InvariantError("layer assignment missing instance " + std::to_string(inst.instance_id));
        int l = it->second;
        if (l < 0 || l >= n_layers)
            throw InvariantError("layer index out of range for instance " + std::to_string(inst.instance_id));
        if (s.layer_masks[l].intersects(inst.amodal_mask))
            throw InvariantError("amodal masks overlap within layer " + std::to_string(l) +
                                 " (instance " + std::to_string(inst.instance_id) + ")");
        auto [acy, acx] = inst.amodal_mask.centroid();
        for (int y = 0; y < scene.h; ++y)
            for (int x = 0; x < scene.w; ++x)
                if (inst.amodal_mask.at(y, x)) {
                    s.layer_masks[l].at(y, x) = 1;
                    s.layer_offsets.at(2 * l + 0, y, x) = acy - y;
                    s.layer_offsets.at(2 * l + 1, y, x) = acx - x;
                    s.layer_valid.at(l, y, x) = 1.0;
                }
    }
    return s;
}

}  // namespace paps
