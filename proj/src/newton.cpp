#include "nsdyn/newton.h"

#include <algorithm>
#include <cmath>

namespace nsdyn {

namespace {

struct RowLayout {
  int joint_begin = 0;
  int mesh_begin = 0;
  int normal_begin = 0;
  int friction_begin = 0;
  int total = 0;
};

RowLayout make_layout(const StepContext& ctx) {
  RowLayout l;
  int n = 0;
  l.joint_begin = 0;
  for (const JointSpec& j : *ctx.joints) {
    switch (j.kind) {
      case JointKind::FixedPoint: n += 3; break;
      case JointKind::Revolute: n += 5; break;
      case JointKind::Prismatic: n += 5; break;
      case JointKind::BendSpring: n += 2; break;
    }
  }
  l.mesh_begin = n;
  for (const MeshBinding& m : *ctx.meshes) {
    const int dim = m.mesh.material.model == MaterialModel::NeoHookean ? 3 : 6;
    n += dim * static_cast<int>(m.mesh.elements.size());
  }
  l.normal_begin = n;
  n += static_cast<int>(ctx.contacts->size());
  l.friction_begin = n;
  n += 2 * static_cast<int>(ctx.contacts->size());
  l.total = n;
  return l;
}

double effective_mass_diag(const BlockDiagMass& mass, const GenRow& row) {
  if (row.idx.empty()) return 0.0;
  return mass.inverse_quadratic(row.idx.data(), row.val.data(),
                                static_cast<int>(row.idx.size()));
}

double residual_inf_norm(const NewtonSystem& sys, const BlockDiagMass& mass) {
  const VecX mdiag = mass.diagonal();
  double r = 0.0;
  for (int k = 0; k < sys.g.size(); ++k) r = std::max(r, std::abs(sys.g[k]) / mdiag[k]);
  for (int k = 0; k < sys.h_vec.size(); ++k) r = std::max(r, std::abs(sys.h_vec[k]));
  return r;
}

double merit_l2(const NewtonSystem& sys) {
  return std::sqrt(sys.g.squaredNorm() + sys.h_vec.squaredNorm());
}

bool has_friction(const StepContext& ctx) {
  for (const ContactConstraint& c : *ctx.contacts)
    if (c.mu > 0.0) return true;
  return false;
}

void fill_contact_telemetry(const StepContext& ctx, const RowLayout& layout, const VecX& lambda,
                            const VecX& u, SolveReport& report) {
  const GeneralizedState& state = *ctx.state;
  const int nc = static_cast<int>(ctx.contacts->size());
  report.contacts.clear();
  report.min_gap = nc ? std::numeric_limits<double>::infinity() : 0.0;
  for (int c = 0; c < nc; ++c) {
    ContactConstraint& contact = (*ctx.contacts)[c];
    const int nrow = layout.normal_begin + c;
    const int frow = layout.friction_begin + 2 * c;
    contact.lambda_n = lambda[nrow];
    contact.lambda_f = Vec2(lambda[frow], lambda[frow + 1]);

    ContactTelemetry t;
    t.gap = contact_gap(contact, state);
    t.mu = contact.mu;
    t.lambda_n = lambda[nrow] / ctx.h;
    const Vec2 lf(lambda[frow] / ctx.h, lambda[frow + 1] / ctx.h);
    t.lambda_f_norm = lf.norm();
    GenRow gt1, gt2;
    contact_tangent_rows(contact, state, gt1, gt2);
    const Vec2 vt(gt1.dot(u), gt2.dot(u));
    t.tangential_speed = vt.norm();
    t.dissipation_dot = lf.dot(vt);
    report.min_gap = std::min(report.min_gap, t.gap);
    report.contacts.push_back(t);
  }
}

}  // namespace

int count_rows(const StepContext& ctx) { return make_layout(ctx).total; }

NewtonSystem assemble(const StepContext& ctx, const BlockDiagMass& mass, const VecX& u_tilde,
                      const VecX& u, const VecX& lambda, const VecX& stiffness_shift,
                      const NewtonConfig& cfg) {
  const GeneralizedState& state = *ctx.state;
  const double h = ctx.h;
  const RowLayout layout = make_layout(ctx);

  NewtonSystem sys;
  sys.num_rows = layout.total;
  sys.h_vec = VecX::Zero(layout.total);
  sys.min_gap = std::numeric_limits<double>::infinity();

  std::vector<Triplet> j_triplets;
  const auto push_row = [&](int row, const GenRow& r) {
    for (size_t k = 0; k < r.idx.size(); ++k)
      j_triplets.push_back({row, r.idx[k], r.val[k]});
  };

  // Joint rows: residual (1/h)(C + e lambda), compliance e/h^2.
  int row = layout.joint_begin;
  for (const JointSpec& joint : *ctx.joints) {
    for (const BilateralRowEval& r : joint_rows(joint, state)) {
      const double lam = lambda[row] / h;
      sys.h_vec[row] = (r.value + r.compliance * lam) / h;
      sys.c_blocks.push_back({row, row, r.compliance / (h * h)});
      push_row(row, r.jac);
      ++row;
    }
  }

  // Material rows: residual (1/h) E (c + lambda), compliance block E/h^2.
  for (const MeshBinding& binding : *ctx.meshes) {
    const int first = binding.particle_base;
    int max_vert = -1;
    for (const TetElement& e : binding.mesh.elements)
      for (int v : e.verts) max_vert = std::max(max_vert, v);
    std::vector<Vec3> positions;
    positions.reserve(max_vert + 1);
    for (int v = 0; v <= max_vert; ++v) positions.push_back(state.position(first + v));

    std::vector<MaterialRows> rows;
    compute_material_rows(binding.mesh, positions, rows);

    for (size_t e = 0; e < rows.size(); ++e) {
      const MaterialRows& mr = rows[e];
      const TetElement& elem = binding.mesh.elements[e];
      const int dim = mr.dim;
      Vec6 lam = Vec6::Zero();
      for (int i = 0; i < dim; ++i) lam[i] = lambda[row + i] / h;
      const Vec6 resid = mr.compliance * (mr.c + lam);
      for (int i = 0; i < dim; ++i) {
        sys.h_vec[row + i] = resid[i] / h;
        for (int jj = 0; jj < dim; ++jj)
          sys.c_blocks.push_back({row + i, row + jj, mr.compliance(i, jj) / (h * h)});
        for (int k = 0; k < 4; ++k) {
          const int dof = state.dof_offset[first + elem.verts[k]];
          for (int d = 0; d < 3; ++d) {
            const double v = mr.jac(i, 3 * k + d);
            if (v != 0.0) j_triplets.push_back({row + i, dof + d, v});
          }
        }
      }
      row += dim;
    }
  }

  // Contact rows.
  const int nc = static_cast<int>(ctx.contacts->size());
  for (int c = 0; c < nc; ++c) {
    const ContactConstraint& contact = (*ctx.contacts)[c];
    const int nrow = layout.normal_begin + c;
    const int frow = layout.friction_begin + 2 * c;

    const GenRow gn = contact_normal_row(contact, state);
    GenRow gt1, gt2;
    contact_tangent_rows(contact, state, gt1, gt2);

    const double gap = contact_gap(contact, state);
    sys.min_gap = std::min(sys.min_gap, gap);
    const double lam_n = lambda[nrow] / h;

    const double dn = effective_mass_diag(mass, gn);
    const double rn = r_factor(dn, h, RowClass::Position, cfg.r_strategy);
    const PhiEval phi = phi_n(gap, lam_n, rn, cfg.ncp_kind);

    sys.h_vec[nrow] = phi.value / h;
    sys.c_blocks.push_back({nrow, nrow, phi.d_lambda / (h * h)});
    if (phi.d_constraint != 0.0) {
      GenRow scaled = gn;
      for (double& v : scaled.val) v *= phi.d_constraint;
      push_row(nrow, scaled);
    }

    sys.comp_error_max = std::max(sys.comp_error_max, std::abs(std::min(gap, lam_n)));

    const Vec2 lam_f(lambda[frow] / h, lambda[frow + 1] / h);
    const double mu_lam_n = contact.mu * lam_n;
    sys.cone_violation_max =
        std::max(sys.cone_violation_max, std::max(0.0, lam_f.norm() - mu_lam_n));

    if (mu_lam_n > 0.0) {
      const Vec2 vt(gt1.dot(u), gt2.dot(u));
      const double df = 0.5 * (effective_mass_diag(mass, gt1) + effective_mass_diag(mass, gt2));
      const double rf = r_factor(df, h, RowClass::Velocity, cfg.r_strategy);
      const double w = friction_W(vt.norm(), lam_f.norm(), mu_lam_n, rf, cfg.ncp_kind);
      sys.h_vec[frow] = vt[0] + w * lam_f[0];
      sys.h_vec[frow + 1] = vt[1] + w * lam_f[1];
      sys.c_blocks.push_back({frow, frow, w / h});
      sys.c_blocks.push_back({frow + 1, frow + 1, w / h});
      push_row(frow, gt1);
      push_row(frow + 1, gt2);
    } else {
      // Inactive contact: rows zeroed, multiplier driven to zero.
      sys.h_vec[frow] = lam_f[0];
      sys.h_vec[frow + 1] = lam_f[1];
      sys.c_blocks.push_back({frow, frow, 1.0 / h});
      sys.c_blocks.push_back({frow + 1, frow + 1, 1.0 / h});
    }
  }

  if (nc == 0) sys.min_gap = 0.0;
  sys.j = SparseMatrix::from_triplets(layout.total, state.num_dof, std::move(j_triplets));

  // Momentum residual g = M (u - u~) - J^T lambda.
  BlockDiagMass unshifted = mass;
  unshifted.shift.setZero();
  sys.g = unshifted.apply(u - u_tilde) - spmv_transpose(sys.j, lambda);

  sys.h_mass = mass;
  sys.h_mass.shift = stiffness_shift;
  return sys;
}

SchurResult schur_solve(const NewtonSystem& sys, const NewtonConfig& cfg) {
  SchurResult out;
  const int n = sys.num_rows;
  if (n == 0) {
    out.delta_lambda = VecX();
    out.delta_u = sys.h_mass.apply_inverse(-sys.g);
    return out;
  }

  // w_i = H^-1 J_i^T shares J_i's sparsity (H is block diagonal).
  const SparseMatrix& j = sys.j;
  std::vector<double> w(j.values.size());
  for (int i = 0; i < n; ++i) {
    const int begin = j.row_offsets[i];
    const int len = j.row_offsets[i + 1] - begin;
    if (len > 0)
      sys.h_mass.apply_inverse_sparse(&j.col_indices[begin], &j.values[begin], len, &w[begin]);
  }

  // Rows touching each DOF, to enumerate interacting row pairs.
  std::vector<std::vector<int>> rows_of_dof(j.cols);
  for (int i = 0; i < n; ++i)
    for (int k = j.row_offsets[i]; k < j.row_offsets[i + 1]; ++k)
      rows_of_dof[j.col_indices[k]].push_back(i);

  std::vector<Triplet> s_triplets;
  std::vector<int> mates;
  for (int i = 0; i < n; ++i) {
    mates.clear();
    for (int k = j.row_offsets[i]; k < j.row_offsets[i + 1]; ++k)
      for (int r : rows_of_dof[j.col_indices[k]])
        if (r >= i) mates.push_back(r);
    std::sort(mates.begin(), mates.end());
    mates.erase(std::unique(mates.begin(), mates.end()), mates.end());
    for (int r : mates) {
      // s_ir = J_r . w_i over shared DOFs (both rows sorted by column).
      double sum = 0.0;
      int ka = j.row_offsets[i], kb = j.row_offsets[r];
      while (ka < j.row_offsets[i + 1] && kb < j.row_offsets[r + 1]) {
        const int ca = j.col_indices[ka], cb = j.col_indices[kb];
        if (ca == cb) {
          sum += w[ka] * j.values[kb];
          ++ka;
          ++kb;
        } else if (ca < cb) {
          ++ka;
        } else {
          ++kb;
        }
      }
      s_triplets.push_back({i, r, sum});
      if (r != i) s_triplets.push_back({r, i, sum});
    }
  }
  for (const Triplet& t : sys.c_blocks) s_triplets.push_back(t);
  for (int i = 0; i < n; ++i) s_triplets.push_back({i, i, cfg.epsilon_reg});

  const SparseMatrix s = SparseMatrix::from_triplets(n, n, std::move(s_triplets));
  const VecX b = spmv(sys.j, sys.h_mass.apply_inverse(sys.g)) - sys.h_vec;

  out.linear = solve_linear(s, b, VecX::Zero(n), cfg.linear);
  out.delta_lambda = out.linear.solution;
  out.delta_u = sys.h_mass.apply_inverse(spmv_transpose(sys.j, out.delta_lambda) - sys.g);
  return out;
}

VecX geometric_stiffness_shifts(const VecX& g_prev, const VecX& g_curr,
                                const BlockDiagMass& mass, const VecX& delta_u) {
  BlockDiagMass unshifted = mass;
  unshifted.shift.setZero();
  const VecX m_du = unshifted.apply(delta_u);
  VecX shifts = VecX::Zero(delta_u.size());
  for (int k = 0; k < delta_u.size(); ++k) {
    if (std::abs(delta_u[k]) < 1e-10) continue;
    const double c_k = -((g_curr[k] - g_prev[k] + m_du[k]) / delta_u[k]);
    shifts[k] = -std::min(0.0, c_k);
  }
  return shifts;
}

VecX apply_geometric_stiffness_policy(const GeneralizedState& state, const VecX& shifts) {
  VecX out = shifts;
  for (size_t b = 0; b < state.bodies.size(); ++b)
    if (state.bodies[b].type == BodyType::Rigid)
      out.segment<6>(state.dof_offset[b]).setZero();
  return out;
}

SolveReport newton_step(const StepContext& ctx, const NewtonConfig& cfg) {
  GeneralizedState& state = *ctx.state;
  const double h = ctx.h;
  SolveReport report;
  const RowLayout layout = make_layout(ctx);

  const VecX q_minus = state.q;
  const VecX u_minus = state.u;

  const BlockDiagMass mass = mass_matrix(state);
  const VecX f_ext = external_forces(state, ctx.gravity);
  const VecX u_tilde = unconstrained_velocity(state, f_ext, h);

  VecX lambda = VecX::Zero(layout.total);
  VecX u = VecX::Zero(state.num_dof);  // zero-velocity starting iterate
  state.u = u;

  VecX shift = VecX::Zero(state.num_dof);
  VecX g_prev, u_prev;
  double min_shift = 0.0;
  const bool line_search = cfg.line_search && !has_friction(ctx);

  for (int n = 0; n < cfg.newton_iterations; ++n) {
    NewtonSystem sys = assemble(ctx, mass, u_tilde, u, lambda, shift, cfg);

    if (n >= 1 && cfg.geometric_stiffness) {
      const VecX raw = geometric_stiffness_shifts(g_prev, sys.g, mass, u - u_prev);
      shift = apply_geometric_stiffness_policy(state, raw);
      sys.h_mass.shift = shift;
      min_shift = std::min(min_shift, shift.minCoeff());
    }
    g_prev = sys.g;
    u_prev = u;

    NewtonIterationStats stats;
    stats.residual_inf = residual_inf_norm(sys, mass);
    stats.merit_l2 = merit_l2(sys);
    stats.comp_error_max = sys.comp_error_max;
    stats.cone_violation_max = sys.cone_violation_max;

    SchurResult sr = schur_solve(sys, cfg);
    if (!sr.delta_u.allFinite() ||
        (sr.delta_lambda.size() && !sr.delta_lambda.allFinite())) {
      state.q = q_minus;
      state.u = u_minus;
      report.aborted = true;
      report.iterations.push_back(stats);
      return report;
    }

    double t = cfg.step_fraction;
    if (line_search) {
      // Backtracking on the L2 merit of the full residual vector.
      double best_t = cfg.step_fraction;
      for (double trial : {1.0, 0.5, 0.25, 0.125}) {
        GeneralizedState probe_state = state;
        const VecX probe_u = u + trial * sr.delta_u;
        const VecX probe_lambda = lambda + trial * sr.delta_lambda;
        probe_state.u = probe_u;
        integrate_coordinates_from(probe_state, q_minus, probe_u, h);
        StepContext probe_ctx = ctx;
        probe_ctx.state = &probe_state;
        const NewtonSystem probe_sys =
            assemble(probe_ctx, mass, u_tilde, probe_u, probe_lambda, shift, cfg);
        if (merit_l2(probe_sys) < stats.merit_l2) {
          best_t = trial;
          break;
        }
      }
      t = best_t;
    }

    lambda += t * sr.delta_lambda;
    u += t * sr.delta_u;
    state.u = u;
    integrate_coordinates_from(state, q_minus, u, h);

    stats.step_size = t * std::sqrt(sr.delta_u.squaredNorm() + sr.delta_lambda.squaredNorm());
    stats.linear_iterations = sr.linear.iterations_used;
    stats.linear_residual =
        sr.linear.residual_history.empty() ? 0.0 : sr.linear.residual_history.back();
    stats.linear_breakdown = sr.linear.breakdown;
    report.iterations.push_back(stats);
    report.linear_histories.push_back(sr.linear.residual_history);
    if (cfg.record_iterates) report.delta_u.push_back(t * sr.delta_u);
  }

  // Final residual for convergence classification and end-of-step telemetry.
  const NewtonSystem final_sys = assemble(ctx, mass, u_tilde, u, lambda, shift, cfg);
  report.final_residual_inf = residual_inf_norm(final_sys, mass);
  report.final_comp_error = final_sys.comp_error_max;
  report.final_cone_violation = final_sys.cone_violation_max;
  report.converged = report.final_residual_inf < cfg.newton_tolerance;
  report.min_diag_shift = min_shift;

  fill_contact_telemetry(ctx, layout, lambda, u, report);
  return report;
}

}  // namespace nsdyn
