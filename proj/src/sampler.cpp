#include "wfbm/sampler.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "wfbm/errors.hpp"
#include "wfbm/parallel.hpp"
#include "wfbm/rng.hpp"

namespace wfbm::sampler {

RowMatrix build_covariance(const TimeGrid& grid, const WfbmParams& p,
                           const QuadratureConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  RowMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double r = kernel::covariance(grid.time(static_cast<std::size_t>(i) + 1),
                                          grid.time(static_cast<std::size_t>(j) + 1), p, cfg);
      m(i, j) = r;
      m(j, i) = r;
    }
  }
  return m;
}

namespace {

// Plain column Cholesky; returns false with the offending pivot on failure.
bool cholesky(const RowMatrix& m, double jitter, RowMatrix& l, double& bad_pivot) {
  const Eigen::Index n = m.rows();
  l.setZero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) + jitter;
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      bad_pivot = d;
      return false;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return true;
}

}  // namespace

GaussianFactor factorize(const RowMatrix& m, const TimeGrid& grid) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw DomainError("factorize needs a non-empty square matrix");
  }
  GaussianFactor f{grid, RowMatrix(), 0.0};
  double pivot = 0.0;
  if (cholesky(m, 0.0, f.lower, pivot)) return f;

  const double base = 1e-12 * m.trace() / static_cast<double>(m.rows());
  double worst = pivot;
  for (int k = 0; k < 8; ++k) {
    const double jitter = base * std::ldexp(1.0, k);
    if (cholesky(m, jitter, f.lower, pivot)) {
      f.jitter_used = jitter;
      return f;
    }
    worst = pivot;
  }
  std::ostringstream os;
  os << "covariance matrix is not positive definite after maximal jitter; pivot " << worst;
  throw FactorizationError(os.str(), worst);
}

GaussianFactor factorize(const TimeGrid& grid, const WfbmParams& p, const QuadratureConfig& cfg) {
  return factorize(build_covariance(grid, p, cfg), grid);
}

PathEnsemble sample(const GaussianFactor& factor, std::size_t n_paths, std::uint64_t seed,
                    unsigned workers) {
  if (n_paths < 1) throw DomainError("sample needs n_paths >= 1");
  const auto n = static_cast<Eigen::Index>(factor.grid.size());
  if (factor.lower.rows() != n) throw DomainError("factor does not match its grid");

  PathEnsemble e{factor.grid, RowMatrix::Zero(static_cast<Eigen::Index>(n_paths), n + 1), seed};
  parallel_blocks(n_paths, workers, [&](unsigned, std::size_t begin, std::size_t end) {
    std::vector<double> z(static_cast<std::size_t>(n));
    for (std::size_t path = begin; path < end; ++path) {
      NormalStream stream(seed, path);
      for (auto& v : z) v = stream.next();
      auto row = e.paths.row(static_cast<Eigen::Index>(path));
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) s += factor.lower(i, k) * z[static_cast<std::size_t>(k)];
        row(i + 1) = s;
      }
    }
  });
  return e;
}

PathEnsemble sample(const TimeGrid& grid, const WfbmParams& p, std::size_t n_paths,
                    std::uint64_t seed, unsigned workers) {
  return sample(factorize(grid, p), n_paths, seed, workers);
}

void write_paths_csv(std::ostream& os, const PathEnsemble& e, std::size_t max_paths) {
  os << "path_id,t,B\n";
  const std::size_t n = std::min(max_paths, e.n_paths());
  os << std::setprecision(17);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i <= e.grid.size(); ++i) {
      os << p << ',' << e.grid.time(i) << ','
         << e.paths(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) << '\n';
    }
  }
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  if (!is) throw DomainError("factor cache truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

constexpr char kMagic[5] = {'W', 'F', 'B', 'M', '1'};

}  // namespace

void save_factor(const std::filesystem::path& file, const GaussianFactor& f) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw DomainError("cannot open " + file.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  const auto n = static_cast<std::uint64_t>(f.lower.rows());
  put_u64(os, n);
  for (Eigen::Index i = 0; i < f.lower.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.lower.cols(); ++j) {
      put_u64(os, std::bit_cast<std::uint64_t>(f.lower(i, j)));
    }
  }
}

GaussianFactor load_factor(const std::filesystem::path& file, const TimeGrid& grid) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw DomainError("cannot open " + file.string());
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, kMagic, 5) != 0) throw DomainError("factor cache: bad magic");
  const std::uint64_t n = get_u64(is);
  if (n != grid.size()) throw DomainError("factor cache: size does not match grid");
  GaussianFactor f{grid, RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 0.0};
  for (Eigen::Index i = 0; i < f.lower.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.lower.cols(); ++j) {
      f.lower(i, j) = std::bit_cast<double>(get_u64(is));
    }
  }
  return f;
}

std::string factor_cache_name(const WfbmParams& p, const TimeGrid& grid) {
  std::uint64_t h = grid.hash();
  for (double v : {p.a(), p.b()}) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 1099511628211ull;
    }
  }
  std::ostringstream os;
  os << "factor_" << std::hex << std::setw(16) << std::setfill('0') << h << ".bin";
  return os.str();
}

}  // namespace wfbm::sampler
