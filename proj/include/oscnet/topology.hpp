#ifndef OSCNET_TOPOLOGY_HPP
#define OSCNET_TOPOLOGY_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/types.hpp"

namespace oscnet {

struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 1.0;
};

enum class IntraCoupling { AllToAll, Sparse };
enum class InterCoupling { None, RingNearestNeighbor, ChainNearestNeighbor };

// Clustered oscillator graph: directed weighted edges, one cluster per
// oscillator, one bridge oscillator per cluster carrying the
// inter-cluster links. Immutable after construction.
struct Topology {
    int n_clusters = 1;
    int per_cluster = 1;
    std::vector<Edge> edges;
    std::vector<int> cluster_of;          // oscillator id -> cluster id
    std::vector<int> bridge_of;           // cluster id -> oscillator id

    int size() const { return n_clusters * per_cluster; }

    std::vector<int> members(int cluster) const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (cluster_of[i] == cluster) out.push_back(i);
        return out;
    }

    void validate() const {
        for (const Edge& e : edges) {
            if (e.src == e.dst) throw config_error("topology: self-edge");
            if (e.src < 0 || e.src >= size() || e.dst < 0 || e.dst >= size())
                throw config_error("topology: edge endpoint out of range");
        }
    }
};

struct IntraSpec {
    IntraCoupling mode = IntraCoupling::AllToAll;
    double sparse_p = 1.0;
    std::uint64_t seed = 0;
};

inline Topology build_clustered(int n_clusters, int per_cluster,
                                const IntraSpec& intra, InterCoupling inter,
                                const std::vector<int>& bridge_override = {}) {
    if (n_clusters < 1 || per_cluster < 1)
        throw config_error("build_clustered: cluster counts must be >= 1");
    if (intra.mode == IntraCoupling::Sparse &&
        (intra.sparse_p < 0.0 || intra.sparse_p > 1.0))
        throw config_error("build_clustered: sparse probability must be in [0,1]");
    if (inter != InterCoupling::None && n_clusters < 2)
        throw config_error("build_clustered: inter-cluster coupling needs >= 2 clusters");

    Topology t;
    t.n_clusters = n_clusters;
    t.per_cluster = per_cluster;
    t.cluster_of.resize(t.size());
    for (int i = 0; i < t.size(); ++i) t.cluster_of[i] = i / per_cluster;

    t.bridge_of.resize(n_clusters);
    for (int c = 0; c < n_clusters; ++c) t.bridge_of[c] = c * per_cluster;
    if (!bridge_override.empty()) {
        if (static_cast<int>(bridge_override.size()) != n_clusters)
            throw config_error("build_clustered: bridge override size mismatch");
        for (int c = 0; c < n_clusters; ++c) {
            int b = bridge_override[c];
            if (b < 0 || b >= t.size() || t.cluster_of[b] != c)
                throw config_error("build_clustered: bridge id not in its cluster");
            t.bridge_of[c] = b;
        }
    }

    std::mt19937_64 rng(intra.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 0; c < n_clusters; ++c) {
        const int base = c * per_cluster;
        for (int i = 0; i < per_cluster; ++i)
            for (int j = 0; j < per_cluster; ++j) {
                if (i == j) continue;
                bool keep = true;
                if (intra.mode == IntraCoupling::Sparse)
                    keep = unit(rng) < intra.sparse_p;
                if (keep) t.edges.push_back({base + i, base + j, 1.0});
            }
    }

    if (inter != InterCoupling::None) {
        const int last = (inter == InterCoupling::RingNearestNeighbor)
                             ? n_clusters
                             : n_clusters - 1;
        for (int c = 0; c < last; ++c) {
            const int cn = (c + 1) % n_clusters;
            if (n_clusters == 2 && c == 1) break; // one bridge pair, no duplicate
            const int a = t.bridge_of[c];
            const int b = t.bridge_of[cn];
            t.edges.push_back({a, b, 1.0});
            t.edges.push_back({b, a, 1.0});
        }
    }
    t.validate();
    return t;
}

inline void check_id(const Topology& t, int id) {
    if (id < 0 || id >= t.size())
        throw std::domain_error("oscillator id out of range");
}

inline std::vector<OscillatorParams> set_enabled(const Topology& t,
                                                 std::vector<OscillatorParams> params,
                                                 int id, bool flag) {
    check_id(t, id);
    params.at(id).enabled = flag;
    return params;
}

// Enabled in-neighbors of `id` as (source id, weight) pairs. A disabled
// target still reports its sources as empty: it neither drives nor is
// driven.
inline std::vector<std::pair<int, double>>
in_neighbors(const Topology& t, const std::vector<OscillatorParams>& params, int id) {
    check_id(t, id);
    std::vector<std::pair<int, double>> out;
    if (!params[id].enabled) return out;
    for (const Edge& e : t.edges)
        if (e.dst == id && params[e.src].enabled)
            out.emplace_back(e.src, e.weight);
    return out;
}

inline void serialize_topology(const Topology& t, std::ostream& os) {
    os << "# oscnet-topology v1\n";
    for (int c = 0; c < t.n_clusters; ++c) {
        os << "cluster " << c;
        for (int m : t.members(c)) os << ' ' << m;
        os << '\n';
    }
    for (const Edge& e : t.edges)
        os << "edge " << e.src << ' ' << e.dst << ' ' << e.weight << '\n';
}

inline std::string serialize_topology(const Topology& t) {
    std::ostringstream os;
    serialize_topology(t, os);
    return os.str();
}

} // namespace oscnet

#endif
