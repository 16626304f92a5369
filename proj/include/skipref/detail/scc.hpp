#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace skipref::detail {

/// Strongly connected components of a graph over nodes 0..n-1 given as
/// adjacency lists. Iterative Tarjan; component ids are assigned in
/// completion order, so every edge goes from a higher-or-equal id to a
/// lower-or-equal id (sinks first).
struct SccResult {
  std::vector<std::size_t> component;  // per node
  std::size_t count = 0;
};

template <class Adjacency>
SccResult strongly_connected(std::size_t n, const Adjacency& adj) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  SccResult out;
  out.component.assign(n, kUnvisited);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // node, next edge
  std::size_t counter = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      const auto& succ = adj[v];
      if (edge < succ.size()) {
        std::size_t w = succ[edge++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      std::size_t node = v;
      call.pop_back();
      if (!call.empty()) {
        std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[node]);
      }
      if (low[node] == index[node]) {
        std::size_t x;
        do {
          x = stack.back();
          stack.pop_back();
          on_stack[x] = 0;
          out.component[x] = out.count;
        } while (x != node);
        ++out.count;
      }
    }
  }
  return out;
}

/// Marks every node from which some cycle is reachable (including nodes on
/// a cycle, and nodes with a self-loop).
template <class Adjacency>
std::vector<char> reaches_cycle(std::size_t n, const Adjacency& adj) {
  SccResult scc = strongly_connected(n, adj);
  std::vector<std::size_t> comp_size(scc.count, 0);
  for (std::size_t v = 0; v < n; ++v) ++comp_size[scc.component[v]];
  std::vector<char> comp_bad(scc.count, 0);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t w : adj[v])
      if (w == v || comp_size[scc.component[v]] > 1) comp_bad[scc.component[v]] = 1;
  // Components complete sinks-first, so successors are settled before
  // their predecessors.
  std::vector<std::vector<std::size_t>> members(scc.count);
  for (std::size_t v = 0; v < n; ++v) members[scc.component[v]].push_back(v);
  for (std::size_t c = 0; c < scc.count; ++c) {
    if (comp_bad[c]) continue;
    for (std::size_t v : members[c])
      for (std::size_t w : adj[v])
        if (comp_bad[scc.component[w]]) comp_bad[c] = 1;
  }
  std::vector<char> out(n, 0);
  for (std::size_t v = 0; v < n; ++v) out[v] = comp_bad[scc.component[v]];
  return out;
}

}  // namespace skipref::detail
