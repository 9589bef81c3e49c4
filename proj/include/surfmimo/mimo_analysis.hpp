#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "surfmimo/channel.hpp"
#include "surfmimo/constants.hpp"
#include "surfmimo/error.hpp"

namespace surfmimo {

/// log2 det(I + (rho / N_tx) H H^H) in bits/s/Hz, equal power per TX port.
inline double capacity(const Eigen::MatrixXcd& h, double snr_linear) {
  if (!(snr_linear > 0.0) || !std::isfinite(snr_linear)) throw DomainError("capacity: SNR must be positive");
  if (!h.allFinite()) throw ModelError("capacity: channel matrix has non-finite entries");
  if (h.size() == 0) throw DomainError("capacity: empty channel matrix");
  const auto nr = h.rows();
  const double scale = snr_linear / static_cast<double>(h.cols());
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(nr, nr) + scale * h * h.adjoint();
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) throw ModelError("capacity: Cholesky factorization failed");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < nr; ++i) logdet += std::log2(llt.matrixL()(i, i).real());
  return 2.0 * logdet;
}

/// sigma_max / sigma_min; +infinity when H is numerically singular.
inline double condition_number(const Eigen::MatrixXcd& h) {
  if (!h.allFinite()) throw ModelError("condition_number: channel matrix has non-finite entries");
  if (h.size() == 0 || h.cwiseAbs().maxCoeff() == 0.0) {
    throw UndefinedConditionError("condition_number: zero matrix has no condition number");
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  const double tol = smax * static_cast<double>(std::max(h.rows(), h.cols())) * std::numeric_limits<double>::epsilon();
  if (smin <= tol) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

/// Maximal ratio combining: branch SNRs add.
inline double mrc_combine(std::span<const double> branch_snrs) {
  if (branch_snrs.empty()) throw DomainError("mrc_combine: at least one branch is required");
  double sum = 0.0;
  for (double s : branch_snrs) sum += s;
  return sum;
}

/// MRC over a column of branch gains at a common transmit SNR.
inline double mrc_combine(const Eigen::VectorXcd& gains, double snr_linear) {
  if (gains.size() == 0) throw DomainError("mrc_combine: at least one branch is required");
  return snr_linear * gains.squaredNorm();
}

/// Zero-forcing post-processing SNR of every stream: rho / N_tx / [(H^H H)^-1]_kk.
inline std::vector<double> zf_stream_snrs(const Eigen::MatrixXcd& h, double snr_linear) {
  if (!h.allFinite()) throw ModelError("zf_stream_snrs: channel matrix has non-finite entries");
  if (h.cols() > h.rows()) throw StreamSeparationError("zf_stream_snrs: more streams than receive ports");
  if (h.size() == 0 || h.cwiseAbs().maxCoeff() == 0.0) throw StreamSeparationError("zf_stream_snrs: zero channel");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12 * s(0)) throw StreamSeparationError("zf_stream_snrs: channel is rank deficient");
  const Eigen::MatrixXcd g = (h.adjoint() * h).inverse();
  const double per_stream = snr_linear / static_cast<double>(h.cols());
  std::vector<double> out;
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    const double gk = g(k, k).real();
    if (!(gk > 0.0)) throw StreamSeparationError("zf_stream_snrs: non-positive noise enhancement");
    out.push_back(per_stream / gk);
  }
  return out;
}

inline constexpr double kDefaultEsmBeta = 1.0;

/// Exponential effective SNR: -beta ln(mean(exp(-snr / beta))), in linear units.
inline double effective_snr(std::span<const double> snrs, double beta = kDefaultEsmBeta) {
  if (snrs.empty()) throw DomainError("effective_snr: no subcarriers");
  if (!(beta > 0.0)) throw DomainError("effective_snr: beta must be positive");
  double lo = snrs[0];
  for (double s : snrs) lo = std::min(lo, s);
  // Factor out the smallest SNR so the exponentials stay in range.
  double acc = 0.0;
  for (double s : snrs) acc += std::exp(-(s - lo) / beta);
  return lo - beta * std::log(acc / static_cast<double>(snrs.size()));
}

struct McsRow {
  int mcs_index = 0;
  std::string modulation;
  std::string coding_rate;
  double bandwidth_hz = 0.0;
  double guard_interval_ns = 0.0;
  double phy_rate_bps = 0.0;  // single spatial stream
  double min_snr_db = 0.0;
};

class McsTable {
 public:
  McsTable() = default;
  McsTable(std::string name, std::vector<McsRow> rows) : name_(std::move(name)), rows_(std::move(rows)) {
    if (rows_.empty()) throw ConfigError("MCS table '" + name_ + "' has no rows");
    std::stable_sort(rows_.begin(), rows_.end(), [](const McsRow& a, const McsRow& b) {
      return a.bandwidth_hz != b.bandwidth_hz ? a.bandwidth_hz < b.bandwidth_hz : a.mcs_index < b.mcs_index;
    });
    for (std::size_t i = 1; i < rows_.size(); ++i) {
      const auto& p = rows_[i - 1];
      const auto& q = rows_[i];
      if (p.bandwidth_hz != q.bandwidth_hz) continue;
      if (!(q.phy_rate_bps > p.phy_rate_bps) || !(q.min_snr_db > p.min_snr_db)) {
        throw ConfigError("MCS table '" + name_ + "': rate and SNR threshold must increase with MCS index");
      }
    }
  }

  const std::string& name() const { return name_; }
  const std::vector<McsRow>& rows() const { return rows_; }

  /// Rows of one bandwidth class, ordered by MCS index.
  McsTable for_bandwidth(double bandwidth_hz) const {
    std::vector<McsRow> sel;
    for (const auto& r : rows_) {
      if (r.bandwidth_hz == bandwidth_hz) sel.push_back(r);
    }
    if (sel.empty()) {
      throw ConfigError("MCS table '" + name_ + "' has no rows for " + std::to_string(bandwidth_hz / 1e6) + " MHz");
    }
    return McsTable(name_, std::move(sel));
  }

  double max_rate_bps() const {
    double m = 0.0;
    for (const auto& r : rows_) m = std::max(m, r.phy_rate_bps);
    return m;
  }

 private:
  std::string name_;
  std::vector<McsRow> rows_;
};

/// Highest MCS whose threshold the effective SNR meets, times the stream count.
/// Zero when the link is below the lowest threshold. The table should hold a
/// single bandwidth class.
inline double map_rate(double esnr_db, const McsTable& table, int n_streams) {
  if (table.rows().empty()) throw ConfigError("map_rate: empty MCS table");
  double rate = 0.0;
  for (const auto& r : table.rows()) {
    if (r.min_snr_db <= esnr_db) rate = std::max(rate, r.phy_rate_bps);
  }
  return rate * n_streams;
}

struct LinkBudget {
  double tx_power_dbm = 0.0;
  double bandwidth_hz = 40e6;
  NoiseModel noise;
  double esm_beta = kDefaultEsmBeta;
  double mac_efficiency = 0.65;
  double extra_loss_db = 0.0;

  double snr_linear() const {
    return db_to_linear(tx_power_dbm - extra_loss_db - noise.noise_power_dbm(bandwidth_hz));
  }
};

struct LinkResult {
  std::string mode;
  double capacity_bps = 0.0;
  double condition_number = 1.0;  // worst subcarrier
  std::vector<double> stream_snrs_db;
  double effective_snr_db = -std::numeric_limits<double>::infinity();
  int streams = 0;
  std::vector<int> tx_ports_used;
  double phy_rate_bps = 0.0;
  double mac_throughput_bps = 0.0;
};

inline std::string mode_label(Eigen::Index rows, Eigen::Index cols) {
  if (rows == 1 && cols == 1) return "SISO";
  return "MIMO-" + std::to_string(rows) + "x" + std::to_string(cols);
}

namespace detail {

inline void for_each_subset(int n, int k, const auto& fn) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline double to_db(double lin) {
  return lin > 0.0 ? linear_to_db(lin) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Link-level result for one band of CSI. The transmitter picks the number of
/// streams and the TX ports carrying them that maximize the MCS-mapped rate;
/// each choice is scored by one effective SNR over every subcarrier and stream
/// under zero-forcing reception.
///
/// `rho` is the total transmit SNR; the budget supplies bandwidth, ESM beta
/// and MAC efficiency.
inline LinkResult analyze_link(std::span<const ChannelMatrix> csi_matrices, double rho, const LinkBudget& budget,
                               const McsTable& table) {
  if (csi_matrices.empty()) throw DomainError("analyze_link: no subcarriers");
  const auto nr = csi_matrices.front().rows();
  const auto nt = csi_matrices.front().cols();
  for (const auto& m : csi_matrices) {
    if (m.rows() != nr || m.cols() != nt) throw DomainError("analyze_link: subcarrier matrices differ in size");
  }
  if (!(rho > 0.0)) throw DomainError("analyze_link: SNR must be positive");
  LinkResult res;
  res.mode = mode_label(nr, nt);

  double cap = 0.0;
  double worst_cond = 1.0;
  for (const auto& m : csi_matrices) {
    cap += capacity(m.h, rho);
    double c = std::numeric_limits<double>::infinity();
    try {
      c = condition_number(m.h);
    } catch (const UndefinedConditionError&) {
    }
    worst_cond = std::max(worst_cond, c);
  }
  res.capacity_bps = cap / static_cast<double>(csi_matrices.size()) * budget.bandwidth_hz;
  res.condition_number = worst_cond;

  const int max_streams = static_cast<int>(std::min(nr, nt));
  for (int s = 1; s <= max_streams; ++s) {
    detail::for_each_subset(static_cast<int>(nt), s, [&](const std::vector<int>& cols) {
      std::vector<double> all;
      std::vector<std::vector<double>> per_stream(static_cast<std::size_t>(s));
      for (const auto& m : csi_matrices) {
        Eigen::MatrixXcd hs(nr, s);
        for (int k = 0; k < s; ++k) hs.col(k) = m.h.col(cols[static_cast<std::size_t>(k)]);
        std::vector<double> snrs;
        try {
          snrs = zf_stream_snrs(hs, rho);
        } catch (const StreamSeparationError&) {
          snrs.assign(static_cast<std::size_t>(s), 0.0);
        }
        for (int k = 0; k < s; ++k) {
          all.push_back(snrs[static_cast<std::size_t>(k)]);
          per_stream[static_cast<std::size_t>(k)].push_back(snrs[static_cast<std::size_t>(k)]);
        }
      }
      const double esnr_db = detail::to_db(effective_snr(all, budget.esm_beta));
      const double rate = map_rate(esnr_db, table, s);
      const bool better = rate > res.phy_rate_bps || (rate == res.phy_rate_bps && res.streams == s &&
                                                      esnr_db > res.effective_snr_db) ||
                          res.streams == 0;
      if (better) {
        res.phy_rate_bps = rate;
        res.streams = s;
        res.effective_snr_db = esnr_db;
        res.tx_ports_used = cols;
        res.stream_snrs_db.clear();
        for (const auto& v : per_stream) res.stream_snrs_db.push_back(detail::to_db(effective_snr(v, budget.esm_beta)));
      }
    });
  }
  res.mac_throughput_bps = res.phy_rate_bps * budget.mac_efficiency;
  return res;
}

inline LinkResult analyze_link(std::span<const ChannelMatrix> csi_matrices, const LinkBudget& budget,
                               const McsTable& table) {
  return analyze_link(csi_matrices, budget.snr_linear(), budget, table);
}

}  // namespace surfmimo
