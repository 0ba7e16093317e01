#include "tsens/hypergraph.hpp"

#include <algorithm>
#include <map>

namespace tsens {

namespace {

bool contains(const std::set<std::string>& s, const std::string& v) {
    return s.find(v) != s.end();
}

}  // namespace

GyoOutcome gyo_eliminate(std::vector<Hyperedge> edges) {
    GyoOutcome out;
    std::sort(edges.begin(), edges.end(),
              [](const Hyperedge& a, const Hyperedge& b) { return a.name < b.name; });
    while (edges.size() > 1) {
        std::map<std::string, std::size_t> occurrences;
        for (const auto& e : edges)
            for (const auto& v : e.attrs) ++occurrences[v];

        bool removed = false;
        for (std::size_t i = 0; i < edges.size() && !removed; ++i) {
            const Hyperedge& ear = edges[i];
            // An ear's vertices are each exclusive to it or covered by a
            // single other edge, the witness.
            for (const auto& w : edges) {
                if (w.name == ear.name) continue;
                bool ok = true;
                for (const auto& v : ear.attrs) {
                    if (occurrences[v] > 1 && !contains(w.attrs, v)) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    out.steps.push_back({ear.name, w.name});
                    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(i));
                    removed = true;
                    break;  // witnesses scanned in name order: first hit is smallest
                }
            }
        }
        if (!removed) {
            out.acyclic = false;
            out.residual = std::move(edges);
            return out;
        }
    }
    out.acyclic = true;
    if (!edges.empty()) out.root = edges.front().name;
    return out;
}

std::vector<std::vector<std::size_t>> connected_components(const ConjunctiveQuery& query) {
    const std::size_t m = query.atoms.size();
    std::vector<std::vector<std::size_t>> adj(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            bool shares = false;
            for (const auto& a : query.atoms[i].attrs)
                if (query.atoms[j].has_attr(a)) {
                    shares = true;
                    break;
                }
            if (shares) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }
    }
    std::vector<bool> visited(m, false);
    std::vector<std::vector<std::size_t>> components;
    for (std::size_t start = 0; start < m; ++start) {
        if (visited[start]) continue;
        std::vector<std::size_t> comp;
        std::vector<std::size_t> stack{start};
        visited[start] = true;
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            comp.push_back(v);
            for (std::size_t w : adj[v])
                if (!visited[w]) {
                    visited[w] = true;
                    stack.push_back(w);
                }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
    }
    return components;
}

JoinTree::JoinTree(const ConjunctiveQuery& query, std::vector<std::vector<std::size_t>> node_atoms,
                   std::vector<int> parents)
    : atoms_(query.atoms) {
    const std::size_t n = node_atoms.size();
    if (n == 0) throw GhdError("decomposition has no nodes");
    if (parents.size() != n) throw GhdError("decomposition parent list does not match node count");

    std::vector<bool> atom_used(atoms_.size(), false);
    nodes_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (node_atoms[v].empty())
            throw GhdError("decomposition node " + std::to_string(v) + " holds no atoms");
        for (std::size_t idx : node_atoms[v]) {
            if (idx >= atoms_.size())
                throw GhdError("decomposition node " + std::to_string(v) +
                               " references atom index " + std::to_string(idx) +
                               " out of range");
            if (atom_used[idx])
                throw GhdError("atom '" + atoms_[idx].relation +
                               "' appears in more than one decomposition node");
            atom_used[idx] = true;
            nodes_[v].attrs.insert(atoms_[idx].attrs.begin(), atoms_[idx].attrs.end());
        }
        nodes_[v].atoms = std::move(node_atoms[v]);
    }
    for (std::size_t idx = 0; idx < atom_used.size(); ++idx)
        if (!atom_used[idx])
            throw GhdError("atom '" + atoms_[idx].relation + "' missing from decomposition");

    for (std::size_t v = 0; v < n; ++v) {
        int p = parents[v];
        if (p == -1) {
            roots_.push_back(static_cast<int>(v));
            continue;
        }
        if (p < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(p) == v)
            throw GhdError("decomposition node " + std::to_string(v) + " has invalid parent " +
                           std::to_string(p));
        nodes_[v].parent = p;
        nodes_[p].children.push_back(static_cast<int>(v));
        std::set_intersection(nodes_[v].attrs.begin(), nodes_[v].attrs.end(),
                              nodes_[p].attrs.begin(), nodes_[p].attrs.end(),
                              std::back_inserter(nodes_[v].shared_with_parent));
    }
    if (roots_.empty()) throw GhdError("decomposition parent links form a cycle (no root)");

    // Reachability from the roots rules out cycles among parent links.
    std::vector<bool> reached(n, false);
    std::vector<int> stack(roots_.begin(), roots_.end());
    std::size_t count = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (reached[static_cast<std::size_t>(v)]) continue;
        reached[static_cast<std::size_t>(v)] = true;
        ++count;
        for (int c : nodes_[static_cast<std::size_t>(v)].children) stack.push_back(c);
    }
    if (count != n) throw GhdError("decomposition parent links form a cycle");

    // Running intersection: the nodes holding any given attribute must be
    // connected through tree edges.
    std::set<std::string> all;
    for (const auto& node : nodes_) all.insert(node.attrs.begin(), node.attrs.end());
    for (const auto& attr : all) {
        std::vector<std::size_t> holders;
        for (std::size_t v = 0; v < n; ++v)
            if (contains(nodes_[v].attrs, attr)) holders.push_back(v);
        if (holders.size() <= 1) continue;
        std::set<std::size_t> holder_set(holders.begin(), holders.end());
        std::set<std::size_t> seen;
        std::vector<std::size_t> frontier{holders.front()};
        seen.insert(holders.front());
        while (!frontier.empty()) {
            std::size_t v = frontier.back();
            frontier.pop_back();
            std::vector<int> neighbors = nodes_[v].children;
            if (nodes_[v].parent >= 0) neighbors.push_back(nodes_[v].parent);
            for (int w : neighbors) {
                auto wu = static_cast<std::size_t>(w);
                if (holder_set.count(wu) && !seen.count(wu)) {
                    seen.insert(wu);
                    frontier.push_back(wu);
                }
            }
        }
        if (seen.size() != holders.size())
            throw GhdError("running intersection violated for attribute '" + attr +
                           "': its nodes are not connected in the tree");
    }
}

std::size_t JoinTree::max_atoms_per_node() const {
    std::size_t p = 0;
    for (const auto& node : nodes_) p = std::max(p, node.atoms.size());
    return p;
}

std::vector<int> JoinTree::post_order() const {
    std::vector<int> order;
    order.reserve(nodes_.size());
    // Iterative DFS emitting a node after all of its children.
    for (int root : roots_) {
        std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
        while (!stack.empty()) {
            auto& [v, next_child] = stack.back();
            const auto& children = nodes_[static_cast<std::size_t>(v)].children;
            if (next_child < children.size()) {
                int c = children[next_child++];
                stack.emplace_back(c, 0);
            } else {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }
    return order;
}

std::vector<int> JoinTree::pre_order() const {
    std::vector<int> order;
    order.reserve(nodes_.size());
    for (int root : roots_) {
        std::vector<int> stack{root};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            order.push_back(v);
            const auto& children = nodes_[static_cast<std::size_t>(v)].children;
            for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
        }
    }
    return order;
}

GyoResult gyo_decompose(const ConjunctiveQuery& query) {
    GyoResult result;
    const std::size_t m = query.atoms.size();
    std::map<std::string, std::size_t> atom_index;
    for (std::size_t i = 0; i < m; ++i) atom_index[query.atoms[i].relation] = i;

    std::vector<int> parents(m, -1);
    for (const auto& comp : connected_components(query)) {
        std::vector<Hyperedge> edges;
        for (std::size_t idx : comp) {
            const Atom& a = query.atoms[idx];
            edges.push_back({a.relation, {a.attrs.begin(), a.attrs.end()}});
        }
        GyoOutcome outcome = gyo_eliminate(std::move(edges));
        if (!outcome.acyclic) {
            result.residual.insert(result.residual.end(), outcome.residual.begin(),
                                   outcome.residual.end());
            continue;
        }
        for (const auto& step : outcome.steps)
            parents[atom_index.at(step.ear)] = static_cast<int>(atom_index.at(step.witness));
        result.steps.insert(result.steps.end(), outcome.steps.begin(), outcome.steps.end());
    }
    if (!result.residual.empty()) {
        result.acyclic = false;
        result.steps.clear();
        return result;
    }
    std::vector<std::vector<std::size_t>> node_atoms(m);
    for (std::size_t i = 0; i < m; ++i) node_atoms[i] = {i};
    result.acyclic = true;
    result.tree.emplace(query, std::move(node_atoms), std::move(parents));
    return result;
}

DoublyAcyclicResult is_doubly_acyclic(const JoinTree& tree) {
    const auto& nodes = tree.nodes();
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        const auto& node = nodes[v];
        // The hypergraph of this node's tree-edge projections: the shared
        // attributes with its parent and with each child.
        std::vector<Hyperedge> edges;
        auto neighbor_name = [&](int w) {
            return tree.atoms()[nodes[static_cast<std::size_t>(w)].atoms.front()].relation;
        };
        if (node.parent >= 0 && !node.shared_with_parent.empty())
            edges.push_back({neighbor_name(node.parent),
                             {node.shared_with_parent.begin(), node.shared_with_parent.end()}});
        for (int c : node.children) {
            const auto& shared = nodes[static_cast<std::size_t>(c)].shared_with_parent;
            if (!shared.empty()) edges.push_back({neighbor_name(c), {shared.begin(), shared.end()}});
        }
        if (edges.size() <= 1) continue;
        if (!gyo_eliminate(std::move(edges)).acyclic)
            return {false, tree.atoms()[node.atoms.front()].relation};
    }
    return {true, ""};
}

JoinTree validate_ghd(const ConjunctiveQuery& query, const std::vector<GhdNodeSpec>& spec) {
    std::map<std::string, std::size_t> atom_index;
    for (std::size_t i = 0; i < query.atoms.size(); ++i)
        atom_index[query.atoms[i].relation] = i;

    std::vector<std::vector<std::size_t>> node_atoms;
    std::vector<int> parents;
    for (std::size_t v = 0; v < spec.size(); ++v) {
        const auto& node = spec[v];
        std::vector<std::size_t> indices;
        for (const auto& name : node.atoms) {
            auto it = atom_index.find(name);
            if (it == atom_index.end())
                throw GhdError("decomposition names atom '" + name +
                               "' which is not in the query");
            indices.push_back(it->second);
        }
        node_atoms.push_back(std::move(indices));
        if (node.parent) {
            if (*node.parent < 0 || static_cast<std::size_t>(*node.parent) >= spec.size())
                throw GhdError("decomposition node " + std::to_string(v) +
                               " has parent index " + std::to_string(*node.parent) +
                               " out of range");
            parents.push_back(*node.parent);
        } else {
            parents.push_back(-1);
        }
    }
    return JoinTree(query, std::move(node_atoms), std::move(parents));
}

JoinTree single_node_ghd(const ConjunctiveQuery& query) {
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < query.atoms.size(); ++i) all.push_back(i);
    return JoinTree(query, {all}, {-1});
}

std::optional<std::vector<std::size_t>> chain_order(const ConjunctiveQuery& query) {
    const std::size_t m = query.atoms.size();
    if (m == 1) return std::vector<std::size_t>{0};

    std::vector<std::vector<std::size_t>> adj(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            bool shares = false;
            for (const auto& a : query.atoms[i].attrs)
                if (query.atoms[j].has_attr(a)) {
                    shares = true;
                    break;
                }
            if (shares) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
        }

    std::vector<std::size_t> endpoints;
    for (std::size_t i = 0; i < m; ++i) {
        if (adj[i].size() > 2) return std::nullopt;
        if (adj[i].size() == 1) endpoints.push_back(i);
        if (adj[i].empty()) return std::nullopt;  // disconnected
    }
    if (endpoints.size() != 2) return std::nullopt;

    std::size_t start = endpoints[0];
    if (query.atoms[endpoints[1]].relation < query.atoms[start].relation) start = endpoints[1];

    std::vector<std::size_t> order{start};
    std::vector<bool> visited(m, false);
    visited[start] = true;
    std::size_t current = start;
    while (order.size() < m) {
        std::size_t next = m;
        for (std::size_t w : adj[current])
            if (!visited[w]) {
                next = w;
                break;
            }
        if (next == m) return std::nullopt;  // walk stuck: not one simple chain
        visited[next] = true;
        order.push_back(next);
        current = next;
    }
    return order;
}

}  // namespace tsens
