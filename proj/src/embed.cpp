#include "hkembed/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "hkembed/errors.hpp"
#include "hkembed/linalg.hpp"

namespace hkembed {

namespace {

void require_dimension(std::size_t dim, std::size_t n) {
  if (dim == 0) throw InvalidArgument("embedding dimension must be at least 1");
  if (dim > n - 1) throw InvalidArgument("embedding dimension must not exceed n-1");
}

void require_k(std::size_t k, std::size_t n) {
  if (k == 0 || k >= n) throw InvalidArgument("neighbor count k must satisfy 1 <= k < n");
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

std::string method_name(EmbedMethod m) {
  switch (m) {
    case EmbedMethod::MDS:
      return "MDS";
    case EmbedMethod::Isomap:
      return "Isomap";
    case EmbedMethod::Eigenmaps:
      return "Eigenmaps";
    case EmbedMethod::TSNE:
      return "t-SNE";
  }
  return "?";
}

EmbedMethod parse_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "mds") return EmbedMethod::MDS;
  if (s == "isomap") return EmbedMethod::Isomap;
  if (s == "eigenmaps" || s == "laplacian" || s == "le") return EmbedMethod::Eigenmaps;
  if (s == "tsne" || s == "t-sne") return EmbedMethod::TSNE;
  throw InvalidArgument("unknown embedding method '" + name + "'");
}

bool NeighborGraph::has_edge(std::size_t i, std::size_t j) const {
  const auto& adj = adjacency.at(i);
  auto it = std::lower_bound(adj.begin(), adj.end(), j, [](const auto& e, std::size_t v) { return e.first < v; });
  return it != adj.end() && it->first == j;
}

std::size_t NeighborGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& a : adjacency) total += a.size();
  return total / 2;
}

std::size_t choose_dimension(std::span<const double> s, double a) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("variance fraction must lie in (0,1)");
  if (s.empty()) throw DegenerateSpectrum("empty spectrum");
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0) || (i > 0 && s[i] > s[i - 1])) {
      throw InvalidArgument("singular values must be nonnegative and nonincreasing");
    }
    total += s[i] * s[i];
  }
  if (!(total > 0.0)) throw DegenerateSpectrum("all singular values are zero");
  double running = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    running += s[i] * s[i];
    if (running / total >= a) return i + 1;
  }
  return s.size();
}

SpectrumReport embedding_dimension(const Eigen::MatrixXd& data, double a) {
  if (data.rows() < 2) throw InvalidArgument("the variance rule needs at least two items");
  if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("variance fraction must lie in (0,1)");
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  SpectrumReport r;
  r.threshold = a;
  const auto& sv = svd.singularValues();
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  r.chosen_dimension = choose_dimension(r.singular_values, a);
  return r;
}

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& d, std::size_t dim) {
  const auto n = static_cast<std::size_t>(d.rows());
  if (d.rows() != d.cols() || n < 2) throw InvalidArgument("MDS needs a square matrix with n >= 2");
  require_dimension(dim, n);

  const Eigen::MatrixXd sq = d.array().square().matrix();
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const Eigen::RowVectorXd col_mean = sq.colwise().mean();
  const double grand = sq.mean();
  Eigen::MatrixXd b = sq;
  b.colwise() -= row_mean;
  b.rowwise() -= col_mean;
  b.array() += grand;
  b *= -0.5;
  b = 0.5 * (b + b.transpose()).eval();

  const auto pairs = symmetric_eigendecomposition(b, n, EigenOrder::Descending);
  double negative = 0.0, absolute = 0.0;
  for (Eigen::Index i = 0; i < pairs.values.size(); ++i) {
    absolute += std::abs(pairs.values[i]);
    if (pairs.values[i] < 0.0) negative -= pairs.values[i];
  }
  if (absolute > 0.0 && negative > 0.0) {
    spdlog::debug("MDS: clamped negative eigenvalues carry {:.3g} of the spectrum", negative / absolute);
  }

  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(d.rows(), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < dim; ++c) {
    const double lambda = pairs.values[static_cast<Eigen::Index>(c)];
    if (lambda > 0.0) coords.col(static_cast<Eigen::Index>(c)) = pairs.vectors.col(static_cast<Eigen::Index>(c)) * std::sqrt(lambda);
  }
  return coords;
}

Embedding classical_mds(const DistanceMatrix& d, std::size_t dim) {
  Embedding e;
  e.coords = classical_mds(d.square(), dim);
  e.method = EmbedMethod::MDS;
  e.metric = d.metric().kind;
  return e;
}

NeighborGraph knn_graph(const DistanceMatrix& d, std::size_t k) {
  const std::size_t n = d.n();
  require_k(k, n);
  NeighborGraph g;
  g.n = n;
  g.k = k;
  std::vector<std::vector<char>> linked(n, std::vector<char>(n, 0));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = d(i, a), db = d(i, b);
                        return da < db || (da == db && a < b);
                      });
    order.resize(n);
    for (std::size_t r = 0; r < k; ++r) linked[i][order[r]] = linked[order[r]][i] = 1;
  }

  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (linked[i][j]) sets.unite(i, j);
    }
  }
  std::size_t components = 0;
  for (std::size_t i = 0; i < n; ++i) components += sets.find(i) == i;
  if (components > 1) {
    // Kruskal over all pairs: each accepted edge is the shortest one between two current components.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(DistanceMatrix::condensed_size(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [&](const auto& a, const auto& b) { return d(a.first, a.second) < d(b.first, b.second); });
    for (const auto& [i, j] : pairs) {
      if (components == 1) break;
      if (sets.unite(i, j)) {
        linked[i][j] = linked[j][i] = 1;
        g.repair_edges.emplace_back(i, j);
        --components;
      }
    }
  }

  g.adjacency.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (linked[i][j]) g.adjacency[i].emplace_back(j, d(i, j));
    }
  }
  return g;
}

Eigen::MatrixXd graph_geodesics(const NeighborGraph& g) {
  const std::size_t n = g.n;
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  using Item = std::pair<double, std::size_t>;
  std::vector<double> dist(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), inf);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[s] = 0.0;
    queue.emplace(0.0, s);
    while (!queue.empty()) {
      const auto [du, u] = queue.top();
      queue.pop();
      if (du > dist[u]) continue;
      for (const auto& [v, w] : g.adjacency[u]) {
        if (du + w < dist[v]) {
          dist[v] = du + w;
          queue.emplace(dist[v], v);
        }
      }
    }
    for (std::size_t t = 0; t < n; ++t) out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = dist[t];
  }
  if (!out.allFinite()) throw InvalidArgument("neighbor graph is disconnected");
  return 0.5 * (out + out.transpose());
}

Embedding isomap(const DistanceMatrix& d, std::size_t k, std::size_t dim) {
  require_dimension(dim, d.n());
  const auto graph = knn_graph(d, k);
  Embedding e;
  e.coords = classical_mds(graph_geodesics(graph), dim);
  e.method = EmbedMethod::Isomap;
  e.metric = d.metric().kind;
  return e;
}

Eigen::MatrixXd normalized_laplacian(const NeighborGraph& graph) {
  const std::size_t n = graph.n;
  std::vector<double> lengths;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : graph.adjacency[i]) {
      if (j > i) lengths.push_back(w);
    }
  }
  if (lengths.empty()) throw InvalidArgument("neighbor graph has no edges");
  std::sort(lengths.begin(), lengths.end());
  const std::size_t mid = lengths.size() / 2;
  const double sigma = lengths.size() % 2 ? lengths[mid] : 0.5 * (lengths[mid - 1] + lengths[mid]);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, dist] : graph.adjacency[i]) {
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sigma > 0.0 ? std::exp(-(dist * dist) / (sigma * sigma)) : 1.0;
    }
  }
  const Eigen::VectorXd inv_sqrt_degree = w.rowwise().sum().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd lap = -(inv_sqrt_degree.asDiagonal() * w * inv_sqrt_degree.asDiagonal());
  lap.diagonal().array() += 1.0;
  return 0.5 * (lap + lap.transpose());
}

Embedding laplacian_eigenmaps(const DistanceMatrix& d, std::size_t k, std::size_t dim) {
  const std::size_t n = d.n();
  require_dimension(dim, n);
  const Eigen::MatrixXd lap = normalized_laplacian(knn_graph(d, k));

  const auto pairs = symmetric_eigendecomposition(lap, n, EigenOrder::Ascending);
  std::size_t usable = 0;
  for (Eigen::Index i = 0; i < pairs.values.size(); ++i) usable += pairs.values[i] < 2.0 - 1e-12;
  if (usable < dim + 1) {
    throw InsufficientSpectrum("only " + std::to_string(usable) + " Laplacian eigenvalues lie below 2");
  }
  Embedding e;
  e.coords = pairs.vectors.middleCols(1, static_cast<Eigen::Index>(dim));
  e.method = EmbedMethod::Eigenmaps;
  e.metric = d.metric().kind;
  return e;
}

void write_embedding_csv(const std::filesystem::path& path, const Embedding& e, std::span<const std::uint32_t> labels) {
  if (labels.size() != e.n()) throw LengthMismatch("one label per embedded item is required");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "id,label";
  for (std::size_t c = 0; c < e.d(); ++c) out << ",c" << c;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < e.n(); ++i) {
    out << i << ',' << labels[i];
    for (std::size_t c = 0; c < e.d(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.coords(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoFailure("write failed for " + path.string());
}

}  // namespace hkembed
