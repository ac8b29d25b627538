#include "nsdyn/bodies.h"

#include <stdexcept>

namespace nsdyn {

void GeneralizedState::finalize_layout() {
  dof_offset.clear();
  coord_offset.clear();
  num_dof = 0;
  num_coord = 0;
  for (const Body& b : bodies) {
    dof_offset.push_back(num_dof);
    coord_offset.push_back(num_coord);
    num_dof += b.dof_count();
    num_coord += b.coord_count();
  }
  q = VecX::Zero(num_coord);
  u = VecX::Zero(num_dof);
  for (size_t i = 0; i < bodies.size(); ++i)
    if (bodies[i].type == BodyType::Rigid) q[coord_offset[i] + 3] = 1.0;  // identity quaternion
}

Mat3 GeneralizedState::rotation(int body) const {
  if (bodies[body].type == BodyType::Particle) return Mat3::Identity();
  return quaternion_to_rotation(orientation(body));
}

Vec3 GeneralizedState::world_point(int body, const Vec3& local) const {
  if (bodies[body].type == BodyType::Particle) return position(body);
  return position(body) + rotation(body) * local;
}

Mat3 GeneralizedState::world_inertia(int body) const {
  const Mat3 r = rotation(body);
  return r * bodies[body].inertia * r.transpose();
}

Eigen::Matrix<double, 4, 3> quaternion_rate_matrix(const Vec4& t) {
  Eigen::Matrix<double, 4, 3> q;
  q << -t[1], -t[2], -t[3],
        t[0],  t[3], -t[2],
       -t[3],  t[0],  t[1],
        t[2], -t[1],  t[0];
  return q;
}

Mat3 quaternion_to_rotation(const Vec4& t) {
  return Eigen::Quaterniond(t[0], t[1], t[2], t[3]).normalized().toRotationMatrix();
}

Vec4 normalized_quaternion(const Vec4& t) {
  const double n = t.norm();
  if (n < 1e-300) return Vec4(1, 0, 0, 0);
  return t / n;
}

VecX coordinate_rates(const GeneralizedState& state, const VecX& u) {
  VecX rates = VecX::Zero(state.num_coord);
  for (size_t i = 0; i < state.bodies.size(); ++i) {
    const int cd = state.coord_offset[i];
    const int vd = state.dof_offset[i];
    if (state.bodies[i].type == BodyType::Particle) {
      rates.segment<3>(cd) = u.segment<3>(vd);
    } else {
      rates.segment<3>(cd) = u.segment<3>(vd);
      rates.segment<4>(cd + 3) =
          0.5 * quaternion_rate_matrix(state.orientation(i)) * u.segment<3>(vd + 3);
    }
  }
  return rates;
}

void integrate_coordinates(GeneralizedState& state, const VecX& u_new, double h) {
  integrate_coordinates_from(state, state.q, u_new, h);
}

void integrate_coordinates_from(GeneralizedState& state, const VecX& q_from, const VecX& u_new,
                                double h) {
  if (h <= 0.0) throw std::invalid_argument("integrate_coordinates: h must be positive");
  const VecX rates = coordinate_rates(state, u_new);
  state.q = q_from + h * rates;
  for (size_t i = 0; i < state.bodies.size(); ++i)
    if (state.bodies[i].type == BodyType::Rigid)
      state.set_orientation(static_cast<int>(i), normalized_quaternion(state.orientation(i)));
}

VecX BlockDiagMass::diagonal() const {
  VecX d = VecX::Zero(num_dof);
  for (const Block& b : blocks) {
    d.segment<3>(b.dof_offset).setConstant(b.mass);
    if (b.type == BodyType::Rigid)
      d.segment<3>(b.dof_offset + 3) = b.inertia_world.diagonal();
  }
  d += shift;
  return d;
}

VecX BlockDiagMass::apply(const VecX& v) const {
  VecX out(num_dof);
  for (const Block& b : blocks) {
    for (int k = 0; k < 3; ++k)
      out[b.dof_offset + k] = v[b.dof_offset + k] * (b.mass + shift[b.dof_offset + k]);
    if (b.type == BodyType::Rigid)
      out.segment<3>(b.dof_offset + 3) = b.inertia_world * v.segment<3>(b.dof_offset + 3);
  }
  return out;
}

VecX BlockDiagMass::apply_inverse(const VecX& v) const {
  VecX out(num_dof);
  for (const Block& b : blocks) {
    for (int k = 0; k < 3; ++k)
      out[b.dof_offset + k] = v[b.dof_offset + k] / (b.mass + shift[b.dof_offset + k]);
    if (b.type == BodyType::Rigid)
      out.segment<3>(b.dof_offset + 3) = b.inertia_world_inv * v.segment<3>(b.dof_offset + 3);
  }
  return out;
}

void BlockDiagMass::apply_inverse_sparse(const int* idx, const double* val, int nnz,
                                         double* out) const {
  int k = 0;
  while (k < nnz) {
    const Block* blk = nullptr;
    for (const Block& b : blocks) {
      const int extent = b.type == BodyType::Particle ? 3 : 6;
      if (idx[k] >= b.dof_offset && idx[k] < b.dof_offset + extent) {
        blk = &b;
        break;
      }
    }
    const int extent = blk->type == BodyType::Particle ? 3 : 6;
    const int start = k;
    Vec6 local = Vec6::Zero();
    while (k < nnz && idx[k] < blk->dof_offset + extent) {
      local[idx[k] - blk->dof_offset] = val[k];
      ++k;
    }
    Vec6 result = Vec6::Zero();
    for (int c = 0; c < 3; ++c)
      result[c] = local[c] / (blk->mass + shift[blk->dof_offset + c]);
    if (blk->type == BodyType::Rigid)
      result.tail<3>() = blk->inertia_world_inv * local.tail<3>();
    for (int m = start; m < k; ++m) out[m] = result[idx[m] - blk->dof_offset];
  }
}

double BlockDiagMass::inverse_quadratic(const int* idx, const double* val, int nnz) const {
  // Gather per-body blocks; rows touch few bodies so a linear scan is fine.
  double sum = 0.0;
  int k = 0;
  while (k < nnz) {
    // Find the block containing this DOF.
    const Block* blk = nullptr;
    for (const Block& b : blocks) {
      const int extent = b.type == BodyType::Particle ? 3 : 6;
      if (idx[k] >= b.dof_offset && idx[k] < b.dof_offset + extent) {
        blk = &b;
        break;
      }
    }
    const int extent = blk->type == BodyType::Particle ? 3 : 6;
    Vec6 local = Vec6::Zero();
    while (k < nnz && idx[k] < blk->dof_offset + extent) {
      local[idx[k] - blk->dof_offset] = val[k];
      ++k;
    }
    for (int c = 0; c < 3; ++c)
      sum += local[c] * local[c] / (blk->mass + shift[blk->dof_offset + c]);
    if (blk->type == BodyType::Rigid) {
      const Vec3 ang = local.tail<3>();
      sum += ang.dot(blk->inertia_world_inv * ang);
    }
  }
  return sum;
}

BlockDiagMass mass_matrix(const GeneralizedState& state) {
  BlockDiagMass m;
  m.num_dof = state.num_dof;
  m.shift = VecX::Zero(state.num_dof);
  for (size_t i = 0; i < state.bodies.size(); ++i) {
    BlockDiagMass::Block b;
    b.type = state.bodies[i].type;
    b.dof_offset = state.dof_offset[i];
    b.mass = state.bodies[i].mass;
    if (b.type == BodyType::Rigid) {
      b.inertia_world = state.world_inertia(static_cast<int>(i));
      b.inertia_world_inv = b.inertia_world.inverse();
    } else {
      b.inertia_world = Mat3::Identity();
      b.inertia_world_inv = Mat3::Identity();
    }
    m.blocks.push_back(b);
  }
  return m;
}

VecX external_forces(const GeneralizedState& state, const Vec3& gravity) {
  VecX f = VecX::Zero(state.num_dof);
  for (size_t i = 0; i < state.bodies.size(); ++i) {
    const int vd = state.dof_offset[i];
    f.segment<3>(vd) = state.bodies[i].mass * gravity;
    if (state.bodies[i].type == BodyType::Rigid) {
      const Vec3 w = state.angular_velocity(static_cast<int>(i));
      const Mat3 iw = state.world_inertia(static_cast<int>(i));
      f.segment<3>(vd + 3) = -w.cross(iw * w);
    }
  }
  return f;
}

VecX unconstrained_velocity(const GeneralizedState& state, const VecX& f_gen, double h) {
  const BlockDiagMass m = mass_matrix(state);
  return state.u + h * m.apply_inverse(f_gen);
}

}  // namespace nsdyn
