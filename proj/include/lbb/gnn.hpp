// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lbb/bnb.hpp"
#include "lbb/milp.hpp"
#include "lbb/rng.hpp"

namespace lbb {

inline constexpr int kVarFeatures = 8;
inline constexpr int kConFeatures = 4;
inline constexpr int kEdgeFeatures = 1;
inline constexpr int kDefaultHidden = 32;

// Variable feature columns (see extract_state).
enum var_feature : int {
  vf_cost = 0,
  vf_has_lower = 1,
  vf_has_upper = 2,
  vf_is_integer = 3,
  vf_lp_value = 4,
  vf_fractionality = 5,
  vf_at_lower = 6,
  vf_at_upper = 7,
};

// The MDP observation: variable/constraint feature matrices, sparse edge
// features, and the branching-candidate mask.
struct bipartite_state {
  Eigen::MatrixXd X;  // n x 8
  Eigen::MatrixXd C;  // m x 4
  std::vector<int> edge_row;   // constraint index per edge
  std::vector<int> edge_col;   // variable index per edge
  Eigen::VectorXd edge_val;    // one feature per edge
  std::vector<uint8_t> mask;   // true iff variable is a branching candidate

  int num_vars() const { return static_cast<int>(X.rows()); }
  int num_cons() const { return static_cast<int>(C.rows()); }
  int num_edges() const { return static_cast<int>(edge_val.size()); }
  int mask_count() const {
    int c = 0;
    for (auto b : mask) c += b != 0;
    return c;
  }
  std::vector<int> masked_indices() const {
    std::vector<int> out;
    for (int q = 0; q < num_vars(); ++q)
      if (mask[q]) out.push_back(q);
    return out;
  }
};

// Bipartite encoding of a solved node: normalized objective/bound/LP-basis
// facts per variable, normalized rhs/slack/dual/alignment facts per
// constraint, normalized coefficients on edges.
inline bipartite_state extract_state(const bnb_node& node, const milp_instance& inst) {
  const int n = inst.num_vars, m = inst.num_cons;
  const auto& x = node.lp.x;
  std::vector<double> lo, hi;
  effective_bounds(inst, node.deltas, lo, hi);

  const double cnorm = std::sqrt(dot(inst.objective, inst.objective));
  std::vector<double> row_norm(m, 0.0), row_dot_c(m, 0.0), row_act(m, 0.0);
  for (const auto& e : inst.rows) {
    row_norm[e.row] += e.value * e.value;
    row_dot_c[e.row] += e.value * inst.objective[e.col];
    row_act[e.row] += e.value * x[e.col];
  }
  for (auto& v : row_norm) v = std::sqrt(v);

  const auto clip10 = [](double v) { return std::clamp(v, -10.0, 10.0); };

  bipartite_state s;
  s.X.resize(n, kVarFeatures);
  std::vector<char> is_int(n, 0);
  for (int j : inst.integer_set) is_int[j] = 1;
  for (int q = 0; q < n; ++q) {
    s.X(q, vf_cost) = inst.objective[q] / (1.0 + cnorm);
    s.X(q, vf_has_lower) = std::isfinite(lo[q]) ? 1.0 : 0.0;
    s.X(q, vf_has_upper) = std::isfinite(hi[q]) ? 1.0 : 0.0;
    s.X(q, vf_is_integer) = is_int[q] ? 1.0 : 0.0;
    s.X(q, vf_lp_value) = clip10(x[q]);
    s.X(q, vf_fractionality) = std::abs(x[q] - std::round(x[q]));
    s.X(q, vf_at_lower) = std::isfinite(lo[q]) && std::abs(x[q] - lo[q]) <= kFeasTol ? 1.0 : 0.0;
    s.X(q, vf_at_upper) = std::isfinite(hi[q]) && std::abs(x[q] - hi[q]) <= kFeasTol ? 1.0 : 0.0;
  }
  s.C.resize(m, kConFeatures);
  for (int i = 0; i < m; ++i) {
    s.C(i, 0) = inst.rhs[i] / (1.0 + row_norm[i]);
    s.C(i, 1) = clip10((inst.rhs[i] - row_act[i]) / (1.0 + std::abs(inst.rhs[i])));
    s.C(i, 2) = clip10(node.lp.duals[i]);
    s.C(i, 3) = row_norm[i] > 0.0 && cnorm > 0.0 ? row_dot_c[i] / (row_norm[i] * cnorm) : 0.0;
  }
  s.edge_row.reserve(inst.rows.size());
  s.edge_col.reserve(inst.rows.size());
  s.edge_val.resize(static_cast<long>(inst.rows.size()));
  long k = 0;
  for (const auto& e : inst.rows) {
    s.edge_row.push_back(e.row);
    s.edge_col.push_back(e.col);
    s.edge_val[k++] = e.value / (1.0 + row_norm[e.row]);
  }
  s.mask.assign(n, 0);
  for (int j : node.candidates) s.mask[j] = 1;
  return s;
}

// All network weights as one flat vector with named matrix views: two
// embedding affines, the edge lift, the shared edge perceptron g, the
// constraint and variable update perceptrons, and the two output heads.
struct gcnn_params {
  int hidden = kDefaultHidden;
  Eigen::VectorXd flat;

  struct layout_entry {
    long offset;
    long rows;
    long cols;
  };

  // order: Wx bx Wc bc We be Wg1 bg1 Wg2 bg2 Wfc1 bfc1 Wfc2 bfc2
  //        Wfx1 bfx1 Wfx2 bfx2 Wp1 bp1 wp2 bp2 Wv1 bv1 wv2 bv2
  static std::vector<layout_entry> layout(int h) {
    std::vector<layout_entry> out;
    long off = 0;
    auto add = [&](long r, long c) {
      out.push_back({off, r, c});
      off += r * c;
    };
    add(h, kVarFeatures), add(h, 1);   // emb_x
    add(h, kConFeatures), add(h, 1);   // emb_c
    add(h, kEdgeFeatures), add(h, 1);  // edge lift
    add(h, 3 * h), add(h, 1);          // g layer 1
    add(h, h), add(h, 1);              // g layer 2
    add(h, 2 * h), add(h, 1);          // f_c layer 1
    add(h, h), add(h, 1);              // f_c layer 2
    add(h, 2 * h), add(h, 1);          // f_x layer 1
    add(h, h), add(h, 1);              // f_x layer 2
    add(h, h), add(h, 1);              // policy head layer 1
    add(1, h), add(1, 1);              // policy head layer 2
    add(h, h), add(h, 1);              // value head layer 1
    add(1, h), add(1, 1);              // value head layer 2
    return out;
  }

  static long param_count(int h) {
    const auto l = layout(h);
    return l.back().offset + l.back().rows * l.back().cols;
  }

  Eigen::Map<Eigen::MatrixXd> view(int index) {
    const auto l = layout(hidden)[static_cast<size_t>(index)];
    return {flat.data() + l.offset, l.rows, l.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> view(int index) const {
    const auto l = layout(hidden)[static_cast<size_t>(index)];
    return {flat.data() + l.offset, l.rows, l.cols};
  }
};

enum param_index : int {
  p_Wx = 0, p_bx, p_Wc, p_bc, p_We, p_be,
  p_Wg1, p_bg1, p_Wg2, p_bg2,
  p_Wfc1, p_bfc1, p_Wfc2, p_bfc2,
  p_Wfx1, p_bfx1, p_Wfx2, p_bfx2,
  p_Wp1, p_bp1, p_wp2, p_bp2,
  p_Wv1, p_bv1, p_wv2, p_bv2,
  p_layer_count
};

inline gcnn_params zero_params(int hidden = kDefaultHidden) {
  gcnn_params p;
  p.hidden = hidden;
  p.flat = Eigen::VectorXd::Zero(gcnn_params::param_count(hidden));
  return p;
}

// Glorot-uniform weights, zero biases.
inline gcnn_params init_params(uint64_t seed, int hidden = kDefaultHidden) {
  gcnn_params p = zero_params(hidden);
  rng gen(seed);
  const auto layers = gcnn_params::layout(hidden);
  for (size_t i = 0; i < layers.size(); i += 2) {  // weights at even slots, biases odd
    const auto& l = layers[i];
    const double a = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    for (long k = 0; k < l.rows * l.cols; ++k) p.flat[l.offset + k] = gen.uniform(-a, a);
  }
  return p;
}

// Cached activations of one forward pass; everything the reverse pass needs.
struct forward_trace {
  Eigen::MatrixXd Xe, Ce, El;      // embeddings: h x n, h x m, h x E
  Eigen::MatrixXd M1, A1, H1;      // pass-1 edge stack 3h x E, pre/post relu h x E
  Eigen::MatrixXd S1, InC, Ac, Hc, Cp;  // per-constraint
  Eigen::MatrixXd M2, A2, H2;      // pass-2 edge stack
  Eigen::MatrixXd S2, InX, Ax, Hx, Xq;  // per-variable
  Eigen::MatrixXd Ap, Hp, Av, Hv;  // heads, h x n
  Eigen::VectorXd logits, vals;    // per-variable scalars
  Eigen::VectorXd pi;              // masked softmax, exact 0 off-mask
  double value = 0.0;
};

struct forward_result {
  Eigen::VectorXd pi;
  double value = 0.0;
  forward_trace trace;
};

// Two-pass graph convolution followed by per-variable heads: a masked
// softmax policy over branching candidates and a masked-sum state value.
inline forward_result gcnn_forward(const bipartite_state& s, const gcnn_params& params) {
  const int n = s.num_vars(), m = s.num_cons(), E = s.num_edges(), h = params.hidden;
  if (s.mask_count() == 0) throw empty_mask("no branching candidates in state");
  if (s.X.cols() != kVarFeatures || s.C.cols() != kConFeatures)
    throw shape_mismatch("state feature widths must be 8 (variables) and 4 (constraints)");

  const auto Wx = params.view(p_Wx), bx = params.view(p_bx);
  const auto Wc = params.view(p_Wc), bc = params.view(p_bc);
  const auto We = params.view(p_We), be = params.view(p_be);
  const auto Wg1 = params.view(p_Wg1), bg1 = params.view(p_bg1);
  const auto Wg2 = params.view(p_Wg2), bg2 = params.view(p_bg2);
  const auto Wfc1 = params.view(p_Wfc1), bfc1 = params.view(p_bfc1);
  const auto Wfc2 = params.view(p_Wfc2), bfc2 = params.view(p_bfc2);
  const auto Wfx1 = params.view(p_Wfx1), bfx1 = params.view(p_bfx1);
  const auto Wfx2 = params.view(p_Wfx2), bfx2 = params.view(p_bfx2);
  const auto Wp1 = params.view(p_Wp1), bp1 = params.view(p_bp1);
  const auto wp2 = params.view(p_wp2), bp2 = params.view(p_bp2);
  const auto Wv1 = params.view(p_Wv1), bv1 = params.view(p_bv1);
  const auto wv2 = params.view(p_wv2), bv2 = params.view(p_bv2);

  forward_trace t;
  t.Xe = (Wx * s.X.transpose()).colwise() + bx.col(0);
  t.Ce = (Wc * s.C.transpose()).colwise() + bc.col(0);
  t.El = (We * s.edge_val.transpose()).colwise() + be.col(0);

  // pass 1: edge messages into constraints
  t.M1.resize(3 * h, E);
  for (int k = 0; k < E; ++k) {
    t.M1.col(k).segment(0, h) = t.Xe.col(s.edge_col[k]);
    t.M1.col(k).segment(h, h) = t.El.col(k);
    t.M1.col(k).segment(2 * h, h) = t.Ce.col(s.edge_row[k]);
  }
  t.A1 = (Wg1 * t.M1).colwise() + bg1.col(0);
  t.H1 = t.A1.cwiseMax(0.0);
  Eigen::MatrixXd G1 = (Wg2 * t.H1).colwise() + bg2.col(0);
  t.S1 = Eigen::MatrixXd::Zero(h, m);
  for (int k = 0; k < E; ++k) t.S1.col(s.edge_row[k]) += G1.col(k);
  t.InC.resize(2 * h, m);
  t.InC.topRows(h) = t.Ce;
  t.InC.bottomRows(h) = t.S1;
  t.Ac = (Wfc1 * t.InC).colwise() + bfc1.col(0);
  t.Hc = t.Ac.cwiseMax(0.0);
  t.Cp = (Wfc2 * t.Hc).colwise() + bfc2.col(0);

  // pass 2: edge messages into variables, now carrying updated constraints
  t.M2.resize(3 * h, E);
  for (int k = 0; k < E; ++k) {
    t.M2.col(k).segment(0, h) = t.Xe.col(s.edge_col[k]);
    t.M2.col(k).segment(h, h) = t.El.col(k);
    t.M2.col(k).segment(2 * h, h) = t.Cp.col(s.edge_row[k]);
  }
  t.A2 = (Wg1 * t.M2).colwise() + bg1.col(0);
  t.H2 = t.A2.cwiseMax(0.0);
  Eigen::MatrixXd G2 = (Wg2 * t.H2).colwise() + bg2.col(0);
  t.S2 = Eigen::MatrixXd::Zero(h, n);
  for (int k = 0; k < E; ++k) t.S2.col(s.edge_col[k]) += G2.col(k);
  t.InX.resize(2 * h, n);
  t.InX.topRows(h) = t.Xe;
  t.InX.bottomRows(h) = t.S2;
  t.Ax = (Wfx1 * t.InX).colwise() + bfx1.col(0);
  t.Hx = t.Ax.cwiseMax(0.0);
  t.Xq = (Wfx2 * t.Hx).colwise() + bfx2.col(0);

  // heads
  t.Ap = (Wp1 * t.Xq).colwise() + bp1.col(0);
  t.Hp = t.Ap.cwiseMax(0.0);
  t.logits = (wp2 * t.Hp).transpose().col(0);
  t.logits.array() += bp2(0, 0);
  t.Av = (Wv1 * t.Xq).colwise() + bv1.col(0);
  t.Hv = t.Av.cwiseMax(0.0);
  t.vals = (wv2 * t.Hv).transpose().col(0);
  t.vals.array() += bv2(0, 0);

  // masked softmax with max subtraction; off-mask entries are exact zero
  double max_logit = -kInf;
  for (int q = 0; q < n; ++q)
    if (s.mask[q]) max_logit = std::max(max_logit, t.logits[q]);
  t.pi = Eigen::VectorXd::Zero(n);
  double denom = 0.0;
  for (int q = 0; q < n; ++q) {
    if (!s.mask[q]) continue;
    t.pi[q] = std::exp(t.logits[q] - max_logit);
    denom += t.pi[q];
  }
  t.pi /= denom;

  t.value = 0.0;
  for (int q = 0; q < n; ++q)
    if (s.mask[q]) t.value += t.vals[q];

  forward_result out;
  out.pi = t.pi;
  out.value = t.value;
  out.trace = std::move(t);
  return out;
}

// Exact reverse-mode gradient of L = dpi . pi + dvalue * V with respect to
// every parameter, given the forward trace.
inline Eigen::VectorXd gcnn_backward(const bipartite_state& s, const gcnn_params& params,
                                     const forward_trace& t, const Eigen::VectorXd& dpi,
                                     double dvalue) {
  const int n = s.num_vars(), m = s.num_cons(), E = s.num_edges(), h = params.hidden;
  if (dpi.size() != n) throw shape_mismatch("dpi length must equal the variable count");

  gcnn_params grad = zero_params(h);
  auto g = [&grad](int idx) { return grad.view(idx); };
  const auto Wg1 = params.view(p_Wg1), Wg2 = params.view(p_Wg2);
  const auto Wfc1 = params.view(p_Wfc1), Wfc2 = params.view(p_Wfc2);
  const auto Wfx1 = params.view(p_Wfx1), Wfx2 = params.view(p_Wfx2);
  const auto Wp1 = params.view(p_Wp1), wp2 = params.view(p_wp2);
  const auto Wv1 = params.view(p_Wv1), wv2 = params.view(p_wv2);

  // softmax backward, restricted to the mask
  double inner = 0.0;
  for (int q = 0; q < n; ++q)
    if (s.mask[q]) inner += dpi[q] * t.pi[q];
  Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(n);
  for (int q = 0; q < n; ++q)
    if (s.mask[q]) dlogits[q] = t.pi[q] * (dpi[q] - inner);

  Eigen::VectorXd dvals = Eigen::VectorXd::Zero(n);
  for (int q = 0; q < n; ++q)
    if (s.mask[q]) dvals[q] = dvalue;

  // policy head
  g(p_wp2) += dlogits.transpose() * t.Hp.transpose();
  g(p_bp2)(0, 0) += dlogits.sum();
  Eigen::MatrixXd dHp = wp2.transpose() * dlogits.transpose();  // h x n
  Eigen::MatrixXd dAp = (t.Ap.array() > 0.0).select(dHp, 0.0);
  g(p_Wp1) += dAp * t.Xq.transpose();
  g(p_bp1).col(0) += dAp.rowwise().sum();
  Eigen::MatrixXd dXq = Wp1.transpose() * dAp;

  // value head
  g(p_wv2) += dvals.transpose() * t.Hv.transpose();
  g(p_bv2)(0, 0) += dvals.sum();
  Eigen::MatrixXd dHv = wv2.transpose() * dvals.transpose();
  Eigen::MatrixXd dAv = (t.Av.array() > 0.0).select(dHv, 0.0);
  g(p_Wv1) += dAv * t.Xq.transpose();
  g(p_bv1).col(0) += dAv.rowwise().sum();
  dXq += Wv1.transpose() * dAv;

  // f_x
  g(p_Wfx2) += dXq * t.Hx.transpose();
  g(p_bfx2).col(0) += dXq.rowwise().sum();
  Eigen::MatrixXd dHx = Wfx2.transpose() * dXq;
  Eigen::MatrixXd dAx = (t.Ax.array() > 0.0).select(dHx, 0.0);
  g(p_Wfx1) += dAx * t.InX.transpose();
  g(p_bfx1).col(0) += dAx.rowwise().sum();
  Eigen::MatrixXd dInX = Wfx1.transpose() * dAx;  // 2h x n
  Eigen::MatrixXd dXe = dInX.topRows(h);
  Eigen::MatrixXd dS2 = dInX.bottomRows(h);

  // pass-2 edge messages
  Eigen::MatrixXd dG2(h, E);
  for (int k = 0; k < E; ++k) dG2.col(k) = dS2.col(s.edge_col[k]);
  g(p_Wg2) += dG2 * t.H2.transpose();
  g(p_bg2).col(0) += dG2.rowwise().sum();
  Eigen::MatrixXd dH2 = Wg2.transpose() * dG2;
  Eigen::MatrixXd dA2 = (t.A2.array() > 0.0).select(dH2, 0.0);
  g(p_Wg1) += dA2 * t.M2.transpose();
  g(p_bg1).col(0) += dA2.rowwise().sum();
  Eigen::MatrixXd dM2 = Wg1.transpose() * dA2;  // 3h x E
  Eigen::MatrixXd dEl = Eigen::MatrixXd::Zero(h, E);
  Eigen::MatrixXd dCp = Eigen::MatrixXd::Zero(h, m);
  for (int k = 0; k < E; ++k) {
    dXe.col(s.edge_col[k]) += dM2.col(k).segment(0, h);
    dEl.col(k) += dM2.col(k).segment(h, h);
    dCp.col(s.edge_row[k]) += dM2.col(k).segment(2 * h, h);
  }

  // f_c
  g(p_Wfc2) += dCp * t.Hc.transpose();
  g(p_bfc2).col(0) += dCp.rowwise().sum();
  Eigen::MatrixXd dHc = Wfc2.transpose() * dCp;
  Eigen::MatrixXd dAc = (t.Ac.array() > 0.0).select(dHc, 0.0);
  g(p_Wfc1) += dAc * t.InC.transpose();
  g(p_bfc1).col(0) += dAc.rowwise().sum();
  Eigen::MatrixXd dInC = Wfc1.transpose() * dAc;  // 2h x m
  Eigen::MatrixXd dCe = dInC.topRows(h);
  Eigen::MatrixXd dS1 = dInC.bottomRows(h);

  // pass-1 edge messages
  Eigen::MatrixXd dG1(h, E);
  for (int k = 0; k < E; ++k) dG1.col(k) = dS1.col(s.edge_row[k]);
  g(p_Wg2) += dG1 * t.H1.transpose();
  g(p_bg2).col(0) += dG1.rowwise().sum();
  Eigen::MatrixXd dH1 = Wg2.transpose() * dG1;
  Eigen::MatrixXd dA1 = (t.A1.array() > 0.0).select(dH1, 0.0);
  g(p_Wg1) += dA1 * t.M1.transpose();
  g(p_bg1).col(0) += dA1.rowwise().sum();
  Eigen::MatrixXd dM1 = Wg1.transpose() * dA1;
  for (int k = 0; k < E; ++k) {
    dXe.col(s.edge_col[k]) += dM1.col(k).segment(0, h);
    dEl.col(k) += dM1.col(k).segment(h, h);
    dCe.col(s.edge_row[k]) += dM1.col(k).segment(2 * h, h);
  }

  // embeddings and edge lift
  g(p_Wx) += dXe * s.X;
  g(p_bx).col(0) += dXe.rowwise().sum();
  g(p_Wc) += dCe * s.C;
  g(p_bc).col(0) += dCe.rowwise().sum();
  g(p_We) += dEl * s.edge_val;
  g(p_be).col(0) += dEl.rowwise().sum();

  return grad.flat;
}

struct adam_state {
  Eigen::VectorXd m, v;
  long long step = 0;
};

inline adam_state make_adam_state(const gcnn_params& params) {
  adam_state s;
  s.m = Eigen::VectorXd::Zero(params.flat.size());
  s.v = Eigen::VectorXd::Zero(params.flat.size());
  return s;
}

// Standard bias-corrected first/second moment update.
inline void adam_step(gcnn_params& params, const Eigen::VectorXd& grad, adam_state& state,
                      double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                      double eps_opt = 1e-8) {
  if (grad.size() != params.flat.size() || state.m.size() != params.flat.size())
    throw shape_mismatch("adam: gradient/moment sizes do not match the parameters");
  state.step += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  params.flat.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps_opt);
}

}  // namespace lbb
