// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "lbb/milp.hpp"

namespace lbb {

inline constexpr int kDefaultLpIterLimit = 50000;

namespace detail {

// Bounded-variable primal simplex on the equality form A x + s = b with
// variable bounds. Maintains an explicit dense basis inverse, refactorized
// periodically. Phase 1 uses one artificial column per initially violated
// row; phase 2 optimizes the true objective with artificials fixed at zero.
class bounded_simplex {
 public:
  bounded_simplex(const milp_instance& inst, const std::vector<bound_delta>& deltas)
      : n_(inst.num_vars), m_(inst.num_cons) {
    effective_bounds(inst, deltas, lo_, hi_);
    cols_.resize(n_);
    for (const auto& e : inst.rows) cols_[e.col].push_back({e.row, e.value});
    rhs_ = inst.rhs;
    obj_ = inst.objective;
  }

  lp_solution solve(int iter_limit) {
    lp_solution out;
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j]) && std::isfinite(hi_[j]) && lo_[j] > hi_[j]) {
        out.status = lp_status::infeasible;
        return out;
      }
    }

    setup();
    iter_limit_ = iter_limit;

    if (have_artificials_) {
      const lp_status ph1 = run(/*phase1=*/true);
      if (ph1 == lp_status::iteration_limit) {
        out.status = ph1;
        out.iterations = iters_;
        return out;
      }
      double infeas = 0.0;
      for (int j = art_begin_; j < ncols_; ++j) infeas += val_[j];
      if (infeas > kFeasTol) {
        out.status = lp_status::infeasible;
        out.iterations = iters_;
        return out;
      }
      for (int j = art_begin_; j < ncols_; ++j) hi_[j] = 0.0;  // never move again
    }

    const lp_status ph2 = run(/*phase1=*/false);
    out.status = ph2;
    out.iterations = iters_;
    if (ph2 != lp_status::optimal) return out;

    out.x.assign(val_.begin(), val_.begin() + n_);
    out.objective = dot(obj_, out.x);
    Eigen::VectorXd y = duals();
    out.duals.assign(y.data(), y.data() + m_);
    return out;
  }

  // Reduced costs of all columns under the phase-2 objective; used by the
  // optimality property tests.
  std::vector<double> reduced_costs() const {
    Eigen::VectorXd y = duals();
    std::vector<double> d(ncols_);
    for (int j = 0; j < ncols_; ++j) d[j] = cost(j, false) - col_dot(j, y);
    return d;
  }

  const std::vector<int>& basis() const { return basis_; }

 private:
  enum class vstat : unsigned char { basic, at_lower, at_upper, free_nb };

  void setup() {
    // columns: [0,n) structural, [n, n+m) slacks, [n+m, ...) artificials
    ncols_ = n_ + m_;
    lo_.resize(ncols_, 0.0);
    hi_.resize(ncols_, kInf);
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = 0.0;
      hi_[n_ + i] = kInf;
    }
    stat_.assign(ncols_, vstat::at_lower);
    val_.assign(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) {
        stat_[j] = vstat::at_lower;
        val_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        stat_[j] = vstat::at_upper;
        val_[j] = hi_[j];
      } else {
        stat_[j] = vstat::free_nb;
        val_[j] = 0.0;
      }
    }

    // alternative start: doubly bounded variables sit at whichever bound
    // helps rows that are violated at the all-lower point; keep whichever
    // start violates fewer rows (fewer artificials)
    {
      std::vector<double> val_b = val_;
      std::vector<vstat> stat_b(stat_.begin(), stat_.end());
      for (int j = 0; j < n_; ++j) {
        if (!std::isfinite(lo_[j]) || !std::isfinite(hi_[j])) continue;
        double pull = 0.0;
        for (const auto& [i, v] : cols_[j])
          if (rhs_[i] < 0.0) pull += v;
        if (pull < 0.0) {
          stat_b[j] = vstat::at_upper;
          val_b[j] = hi_[j];
        }
      }
      const auto violated = [&](const std::vector<double>& v) {
        std::vector<double> r = rhs_;
        for (int j = 0; j < n_; ++j) {
          if (v[j] == 0.0) continue;
          for (const auto& [i, coef] : cols_[j]) r[i] -= coef * v[j];
        }
        int count = 0;
        for (int i = 0; i < m_; ++i) count += r[i] < 0.0;
        return count;
      };
      if (violated(val_b) < violated(val_)) {
        val_ = std::move(val_b);
        for (int j = 0; j < n_; ++j) stat_[j] = stat_b[j];
      }
    }

    std::vector<double> r = rhs_;
    for (int j = 0; j < n_; ++j) {
      if (val_[j] == 0.0) continue;
      for (const auto& [i, v] : cols_[j]) r[i] -= v * val_[j];
    }

    basis_.resize(m_);
    art_begin_ = ncols_;
    art_row_.clear();
    std::vector<double> binv_diag(m_, 1.0);
    for (int i = 0; i < m_; ++i) {
      if (r[i] >= 0.0) {
        basis_[i] = n_ + i;  // slack basic
        stat_[n_ + i] = vstat::basic;
        val_[n_ + i] = r[i];
      } else {
        const int a = ncols_ + static_cast<int>(art_row_.size());
        art_row_.push_back(i);
        basis_[i] = a;
        binv_diag[i] = -1.0;  // artificial column is -e_i
        val_.push_back(-r[i]);
        stat_.push_back(vstat::basic);
        lo_.push_back(0.0);
        hi_.push_back(kInf);
      }
    }
    if (!art_row_.empty()) {
      art_begin_ = ncols_;
      ncols_ += static_cast<int>(art_row_.size());
      have_artificials_ = true;
    }
    binvT_ = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) binvT_(i, i) = binv_diag[i];
    iters_ = 0;
  }

  double cost(int j, bool phase1) const {
    if (phase1) return j >= art_begin_ ? 1.0 : 0.0;
    return j < n_ ? obj_[j] : 0.0;
  }

  // y = Binv^T c_B for the given phase's costs.
  Eigen::VectorXd duals_for(bool phase1) const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost(basis_[i], phase1);
    return binvT_ * cb;
  }

  Eigen::VectorXd duals() const { return duals_for(false); }

  double col_dot(int j, const Eigen::VectorXd& y) const {
    if (j < n_) {
      double s = 0.0;
      for (const auto& [i, v] : cols_[j]) s += y[i] * v;
      return s;
    }
    if (j < art_begin_) return y[j - n_];        // slack e_i
    return -y[art_row_[j - art_begin_]];         // artificial -e_i
  }

  Eigen::VectorXd ftran(int j) const {
    if (j < n_) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(m_);
      for (const auto& [i, v] : cols_[j]) w += binvT_.row(i).transpose() * v;
      return w;
    }
    if (j < art_begin_) return binvT_.row(j - n_).transpose();
    return -binvT_.row(art_row_[j - art_begin_]).transpose();
  }

  void refactorize() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (int k = 0; k < m_; ++k) {
      const int j = basis_[k];
      if (j < n_) {
        for (const auto& [i, v] : cols_[j]) b(i, k) = v;
      } else if (j < art_begin_) {
        b(j - n_, k) = 1.0;
      } else {
        b(art_row_[j - art_begin_], k) = -1.0;
      }
    }
    binvT_ = b.partialPivLu().inverse().transpose();
    Eigen::VectorXd r(m_);
    for (int i = 0; i < m_; ++i) r[i] = rhs_[i];
    for (int j = 0; j < ncols_; ++j) {
      if (stat_[j] == vstat::basic || val_[j] == 0.0) continue;
      if (j < n_) {
        for (const auto& [i, v] : cols_[j]) r[i] -= v * val_[j];
      } else if (j < art_begin_) {
        r[j - n_] -= val_[j];
      } else {
        r[art_row_[j - art_begin_]] += val_[j];
      }
    }
    Eigen::VectorXd xb = binvT_.transpose() * r;
    for (int i = 0; i < m_; ++i) val_[basis_[i]] = xb[i];
  }

  lp_status run(bool phase1) {
    const double opt_tol = 1e-9;
    const int bland_trigger = 3 * (n_ + m_);
    int degen_streak = 0;
    bool bland = false;
    int since_refactor = 0;

    while (true) {
      if (iters_ >= iter_limit_) return lp_status::iteration_limit;

      Eigen::VectorXd y = duals_for(phase1);

      int enter = -1, dir = 0;
      double best = opt_tol;
      for (int j = 0; j < ncols_; ++j) {
        if (stat_[j] == vstat::basic) continue;
        if (lo_[j] == hi_[j]) continue;  // fixed (incl. retired artificials)
        if (!phase1 && j >= art_begin_) continue;
        const double d = cost(j, phase1) - col_dot(j, y);
        int sigma = 0;
        double score = 0.0;
        if (stat_[j] == vstat::at_lower && d < -opt_tol) {
          sigma = 1;
          score = -d;
        } else if (stat_[j] == vstat::at_upper && d > opt_tol) {
          sigma = -1;
          score = d;
        } else if (stat_[j] == vstat::free_nb && std::abs(d) > opt_tol) {
          sigma = d < 0 ? 1 : -1;
          score = std::abs(d);
        } else {
          continue;
        }
        if (bland) {
          enter = j;
          dir = sigma;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
          dir = sigma;
        }
      }
      if (enter < 0) return lp_status::optimal;

      Eigen::VectorXd w = ftran(enter);

      // ratio test: largest step t >= 0 keeping all basics within bounds;
      // the entering variable's own range caps the step as a bound flip
      const double span = hi_[enter] - lo_[enter];  // inf if either bound missing
      double t_basic = kInf;
      int leave_row = -1;
      for (int i = 0; i < m_; ++i) {
        const double delta = -dir * w[i];
        if (std::abs(delta) <= kPivotTol) continue;
        const int bj = basis_[i];
        double ti;
        if (delta > 0.0) {
          if (!std::isfinite(hi_[bj])) continue;
          ti = (hi_[bj] - val_[bj]) / delta;
        } else {
          if (!std::isfinite(lo_[bj])) continue;
          ti = (lo_[bj] - val_[bj]) / delta;
        }
        if (ti < 0.0) ti = 0.0;  // already at / slightly past the bound
        bool take = false;
        if (leave_row < 0 || ti < t_basic - 1e-12) {
          take = true;
        } else if (ti <= t_basic + 1e-12) {
          // tie window: largest pivot for stability, smallest index under Bland
          take = bland ? bj < basis_[leave_row]
                       : std::abs(w[i]) > std::abs(w[leave_row]);
        }
        if (take) {
          t_basic = std::min(t_basic, ti);
          leave_row = i;
        }
      }

      if (!std::isfinite(span) && leave_row < 0) return lp_status::unbounded;

      const double t = std::isfinite(span) && span <= t_basic ? span : t_basic;
      ++iters_;
      if (t <= 1e-12) {
        if (++degen_streak > bland_trigger) bland = true;
      } else {
        degen_streak = 0;
      }

      if (std::isfinite(span) && span <= t_basic) {
        // entering variable flips to its opposite bound, basis unchanged
        for (int i = 0; i < m_; ++i) val_[basis_[i]] -= dir * t * w[i];
        val_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
        stat_[enter] = dir > 0 ? vstat::at_upper : vstat::at_lower;
        continue;
      }

      // pivot
      for (int i = 0; i < m_; ++i) val_[basis_[i]] -= dir * t * w[i];
      val_[enter] = (stat_[enter] == vstat::at_lower   ? lo_[enter]
                     : stat_[enter] == vstat::at_upper ? hi_[enter]
                                                       : 0.0) +
                    dir * t;
      const int leaving = basis_[leave_row];
      const double delta_leave = -dir * w[leave_row];
      if (delta_leave > 0.0) {
        val_[leaving] = hi_[leaving];
        stat_[leaving] = vstat::at_upper;
      } else {
        val_[leaving] = lo_[leaving];
        stat_[leaving] = vstat::at_lower;
      }
      basis_[leave_row] = enter;
      stat_[enter] = vstat::basic;

      const double piv = w[leave_row];
      binvT_.col(leave_row) /= piv;
      Eigen::VectorXd pivot_col = binvT_.col(leave_row);
      Eigen::VectorXd wz = w;
      wz[leave_row] = 0.0;
      binvT_.noalias() -= pivot_col * wz.transpose();

      if (++since_refactor >= 128) {
        refactorize();
        since_refactor = 0;
      }
    }
  }

  int n_, m_;
  int ncols_ = 0;
  int art_begin_ = 0;
  bool have_artificials_ = false;
  int iter_limit_ = kDefaultLpIterLimit;
  int iters_ = 0;

  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> rhs_, obj_;
  std::vector<double> lo_, hi_, val_;
  std::vector<vstat> stat_;
  std::vector<int> basis_;
  std::vector<int> art_row_;
  Eigen::MatrixXd binvT_;
};

}  // namespace detail

// Solves the LP relaxation of `inst` with bounds tightened by `deltas`.
inline lp_solution lp_relax_solve(const milp_instance& inst,
                                  const std::vector<bound_delta>& deltas = {},
                                  int iter_limit = kDefaultLpIterLimit) {
  detail::bounded_simplex s(inst, deltas);
  return s.solve(iter_limit);
}

}  // namespace lbb
