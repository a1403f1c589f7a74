#include "curveflow/femcore.hpp"

#include <stdexcept>
#include <string>

namespace curveflow::fem {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

std::size_t node_count(const Eigen::VectorXd& field, const PolygonalCurve& curve, int& components) {
  const auto n = static_cast<Eigen::Index>(curve.size());
  if (field.size() == n) {
    components = 1;
  } else if (field.size() == 2 * n) {
    components = 2;
  } else {
    throw std::invalid_argument("nodal field length " + std::to_string(field.size()) + " does not match a curve with " +
                                std::to_string(n) + " vertices");
  }
  return curve.size();
}

std::vector<Vec2> unpack(const Eigen::VectorXd& xy) {
  if (xy.size() % 2 != 0) throw std::invalid_argument("interleaved coordinates need an even length");
  std::vector<Vec2> v(static_cast<std::size_t>(xy.size() / 2));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {xy[2 * i], xy[2 * i + 1]};
  return v;
}

Eigen::SparseMatrix<double> from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void append_block(Triplets& out, const Eigen::SparseMatrix<double>& block, Eigen::Index row0, Eigen::Index col0) {
  for (Eigen::Index c = 0; c < block.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(block, c); it; ++it) {
      out.emplace_back(row0 + it.row(), col0 + it.col(), it.value());
    }
  }
}

bool has_perimeter_law(Mode m) { return m != Mode::AreaPreserving; }
bool has_area_law(Mode m) { return m != Mode::PerimeterDecreasing; }

struct Averaged {
  VectorField x;
  NodalField kappa;
  double lambda;
  double eta;
};

Averaged averaged(const StepContext& ctx, const Iterate& it) {
  if (ctx.theta == 1.0) return {it.x, it.kappa, it.lambda, it.eta};
  const double th = ctx.theta;
  const Iterate& p = ctx.previous;
  return {th * it.x + (1.0 - th) * p.x, th * it.kappa + (1.0 - th) * p.kappa, th * it.lambda + (1.0 - th) * p.lambda,
          th * it.eta + (1.0 - th) * p.eta};
}

void check_context(const StepContext& ctx, const Iterate& it) {
  const Eigen::Index n = ctx.reference.nodes();
  if (it.x.size() != 2 * n || it.kappa.size() != n || ctx.x_history.size() != 2 * n) {
    throw std::invalid_argument("iterate does not match the reference polygon");
  }
  if (ctx.theta != 1.0 && (ctx.previous.x.size() != 2 * n || ctx.previous.kappa.size() != n)) {
    throw std::invalid_argument("averaged scheme needs the previous level");
  }
}

}  // namespace

EdgeField EdgeField::from_nodal(const Eigen::VectorXd& nodal, int components) {
  const std::size_t n = static_cast<std::size_t>(nodal.size()) / static_cast<std::size_t>(components);
  EdgeField f;
  f.components = components;
  f.start.resize(n * components);
  f.end.resize(n * components);
  for (std::size_t j = 0; j < n; ++j) {
    for (int d = 0; d < components; ++d) {
      f.start[j * components + d] = nodal[static_cast<Eigen::Index>(j * components + d)];
      f.end[j * components + d] = nodal[static_cast<Eigen::Index>(((j + 1) % n) * components + d)];
    }
  }
  return f;
}

double lumped_inner(const EdgeField& u, const EdgeField& v, const PolygonalCurve& curve) {
  const std::size_t n = curve.size();
  const auto cu = static_cast<std::size_t>(u.components);
  if (u.components != v.components || u.start.size() != n * cu || u.end.size() != n * cu ||
      v.start.size() != n * cu || v.end.size() != n * cu) {
    throw std::invalid_argument("edge fields do not match the curve");
  }
  const auto edges = edge_data(curve);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double at_start = 0.0, at_end = 0.0;
    for (std::size_t d = 0; d < cu; ++d) {
      at_start += u.start[j * cu + d] * v.start[j * cu + d];
      at_end += u.end[j * cu + d] * v.end[j * cu + d];
    }
    sum += 0.5 * edges[j].length * (at_start + at_end);
  }
  return sum;
}

double lumped_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const PolygonalCurve& curve) {
  int cu = 0, cv = 0;
  node_count(u, curve, cu);
  node_count(v, curve, cv);
  if (cu != cv) throw std::invalid_argument("fields have different component counts");
  return lumped_inner(EdgeField::from_nodal(u, cu), EdgeField::from_nodal(v, cv), curve);
}

double stiffness_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const PolygonalCurve& curve) {
  int cu = 0, cv = 0;
  const std::size_t n = node_count(u, curve, cu);
  node_count(v, curve, cv);
  if (cu != cv) throw std::invalid_argument("fields have different component counts");
  const auto edges = edge_data(curve);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = (j + 1) % n;
    for (int d = 0; d < cu; ++d) {
      const auto a = static_cast<Eigen::Index>(j * cu + d);
      const auto b = static_cast<Eigen::Index>(k * cu + d);
      sum += (u[b] - u[a]) * (v[b] - v[a]) / edges[j].length;
    }
  }
  return sum;
}

VectorField perimeter_gradient(const Eigen::VectorXd& xy) {
  const auto edges = edge_data(unpack(xy));
  const std::size_t n = edges.size();
  VectorField g(2 * static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const EdgeData& before = edges[(i + n - 1) % n];
    const EdgeData& after = edges[i];
    g[2 * i] = before.vector.x / before.length - after.vector.x / after.length;
    g[2 * i + 1] = before.vector.y / before.length - after.vector.y / after.length;
  }
  return g;
}

VectorField area_gradient(const Eigen::VectorXd& xy) {
  const Eigen::Index n = xy.size() / 2;
  VectorField g(xy.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index next = (i + 1) % n, prev = (i + n - 1) % n;
    const Vec2 w = 0.5 * rotate_cw({xy[2 * next] - xy[2 * prev], xy[2 * next + 1] - xy[2 * prev + 1]});
    g[2 * i] = w.x;
    g[2 * i + 1] = w.y;
  }
  return g;
}

double variation_perimeter(const PolygonalCurve& curve, const VectorField& direction) {
  if (direction.size() != 2 * static_cast<Eigen::Index>(curve.size())) {
    throw std::invalid_argument("direction does not match the curve");
  }
  return perimeter_gradient(curve.coordinates()).dot(direction);
}

double variation_area(const PolygonalCurve& curve, const VectorField& direction) {
  if (direction.size() != 2 * static_cast<Eigen::Index>(curve.size())) {
    throw std::invalid_argument("direction does not match the curve");
  }
  return area_gradient(curve.coordinates()).dot(direction);
}

NodalField initial_curvature(const PolygonalCurve& curve) {
  // The 2N x N system couples each kappa_i only to the two equations of
  // vertex i, so the (mass-weighted) normal equations are diagonal.
  const ReferenceGeometry ref(curve);
  const Eigen::Index n = ref.nodes();
  const VectorField xy = curve.coordinates();
  NodalField kappa(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index prev = (i + n - 1) % n, next = (i + 1) % n;
    const double lp = ref.lengths[static_cast<std::size_t>(prev)];
    const double ln = ref.lengths[static_cast<std::size_t>(i)];
    const double rx = (xy[2 * i] - xy[2 * prev]) / lp - (xy[2 * next] - xy[2 * i]) / ln;
    const double ry = (xy[2 * i + 1] - xy[2 * prev + 1]) / lp - (xy[2 * next + 1] - xy[2 * i + 1]) / ln;
    const double wx = ref.vertex_normals[2 * i], wy = ref.vertex_normals[2 * i + 1];
    const double ww = wx * wx + wy * wy;
    if (!(ww > 0.0)) throw std::runtime_error("singular normal equations at vertex " + std::to_string(i));
    kappa[i] = (wx * rx + wy * ry) / ww;
  }
  return kappa;
}

ReferenceGeometry::ReferenceGeometry(std::span<const Vec2> vertices) {
  const auto edges = edge_data(vertices);
  const std::size_t n = edges.size();
  lengths.resize(n);
  mass.resize(static_cast<Eigen::Index>(n));
  vertex_normals.resize(2 * static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) lengths[j] = edges[j].length;
  for (std::size_t i = 0; i < n; ++i) {
    const EdgeData& before = edges[(i + n - 1) % n];
    const EdgeData& after = edges[i];
    mass[static_cast<Eigen::Index>(i)] = 0.5 * (before.length + after.length);
    vertex_normals[2 * i] = 0.5 * (before.length * before.normal.x + after.length * after.normal.x);
    vertex_normals[2 * i + 1] = 0.5 * (before.length * before.normal.y + after.length * after.normal.y);
  }
}

ReferenceGeometry ReferenceGeometry::of(const Eigen::VectorXd& xy) {
  const auto v = unpack(xy);
  return ReferenceGeometry(std::span<const Vec2>(v));
}

Eigen::VectorXd ReferenceGeometry::stiffness_apply(const Eigen::VectorXd& u) const {
  const Eigen::Index n = nodes();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index prev = (i + n - 1) % n, next = (i + 1) % n;
    out[i] = (u[i] - u[prev]) / lengths[static_cast<std::size_t>(prev)] +
             (u[i] - u[next]) / lengths[static_cast<std::size_t>(i)];
  }
  return out;
}

Eigen::SparseMatrix<double> ReferenceGeometry::stiffness_matrix() const {
  const Eigen::Index n = nodes();
  Triplets t;
  t.reserve(static_cast<std::size_t>(4 * n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index k = (j + 1) % n;
    const double w = 1.0 / lengths[static_cast<std::size_t>(j)];
    t.emplace_back(j, j, w);
    t.emplace_back(k, k, w);
    t.emplace_back(j, k, -w);
    t.emplace_back(k, j, -w);
  }
  return from_triplets(n, n, t);
}

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::StructurePreserving: return "SP";
    case Mode::PerimeterDecreasing: return "PD";
    case Mode::AreaPreserving: return "AP";
  }
  return "?";
}

Eigen::VectorXd residual(const StepContext& ctx, const Iterate& it) {
  check_context(ctx, it);
  const ReferenceGeometry& ref = ctx.reference;
  const Eigen::Index n = ref.nodes();
  const Averaged av = averaged(ctx, it);
  const bool per = has_perimeter_law(ctx.mode);
  const bool area = has_area_law(ctx.mode);

  Eigen::VectorXd r(3 * n + (per ? 1 : 0) + (area ? 1 : 0));
  const VectorField velocity = ctx.x_coef * it.x + ctx.x_history;
  const Eigen::VectorXd ak = ref.stiffness_apply(av.kappa);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double normal_part =
        ref.vertex_normals[2 * i] * velocity[2 * i] + ref.vertex_normals[2 * i + 1] * velocity[2 * i + 1];
    const double mult = per ? av.lambda * av.kappa[i] : 0.0;
    const double shift = area ? av.eta : 0.0;
    r[i] = normal_part + ctx.tau * (ak[i] - ref.mass[i] * (mult + shift));
  }
  for (int d = 0; d < 2; ++d) {
    Eigen::VectorXd comp(n);
    for (Eigen::Index i = 0; i < n; ++i) comp[i] = av.x[2 * i + d];
    const Eigen::VectorXd ax = ref.stiffness_apply(comp);
    for (Eigen::Index i = 0; i < n; ++i) r[n + 2 * i + d] = ref.vertex_normals[2 * i + d] * av.kappa[i] - ax[i];
  }
  Eigen::Index row = 3 * n;
  if (per) {
    r[row++] = (ctx.perimeter_coef * perimeter(it.x) + ctx.perimeter_history) / ctx.tau + av.kappa.dot(ak);
  }
  if (area) r[row++] = signed_area(it.x) - ctx.area_target;
  return r;
}

NewtonBlocks assemble_newton_blocks(const StepContext& ctx, const Iterate& it) {
  check_context(ctx, it);
  const ReferenceGeometry& ref = ctx.reference;
  const Eigen::Index n = ref.nodes();
  const Averaged av = averaged(ctx, it);
  const double th = ctx.theta;
  const double tau = ctx.tau;
  const bool per = has_perimeter_law(ctx.mode);
  const double lam = per ? av.lambda : 0.0;

  NewtonBlocks b;
  const Eigen::SparseMatrix<double> stiff = ref.stiffness_matrix();

  Triplets tp, tq, tr, tk;
  tp.reserve(static_cast<std::size_t>(2 * n));
  tk.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < 2; ++d) {
      tp.emplace_back(i, 2 * i + d, ctx.x_coef * ref.vertex_normals[2 * i + d]);
      tk.emplace_back(2 * i + d, i, th * ref.vertex_normals[2 * i + d]);
    }
  }
  append_block(tq, stiff, 0, 0);
  for (auto& t : tq) t = {t.row(), t.col(), tau * th * t.value()};
  for (Eigen::Index i = 0; i < n; ++i) tq.emplace_back(i, i, -tau * th * lam * ref.mass[i]);
  for (Eigen::Index c = 0; c < stiff.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator e(stiff, c); e; ++e) {
      for (int d = 0; d < 2; ++d) tr.emplace_back(2 * e.row() + d, 2 * e.col() + d, -th * e.value());
    }
  }
  b.P = from_triplets(n, 2 * n, tp);
  b.Q = from_triplets(n, n, tq);
  b.R = from_triplets(2 * n, 2 * n, tr);
  b.Pk = from_triplets(2 * n, n, tk);

  b.a1 = -tau * th * ref.mass.cwiseProduct(av.kappa);
  b.a2 = -tau * th * ref.mass;
  const Eigen::VectorXd ak = ref.stiffness_apply(av.kappa);
  b.b1 = (ctx.perimeter_coef / tau) * perimeter_gradient(it.x);
  b.b2 = 2.0 * th * ak;
  b.c = area_gradient(it.x);

  const Eigen::VectorXd r = residual(ctx, it);
  b.F1 = -r.head(n);
  b.F2 = -r.segment(n, 2 * n);
  Eigen::Index row = 3 * n;
  if (per) b.f1 = -r[row++];
  if (has_area_law(ctx.mode)) b.f2 = -r[row++];
  return b;
}

linalg::BorderedSystem to_bordered_system(const NewtonBlocks& b, Mode mode) {
  const Eigen::Index n = b.Q.rows();
  const bool per = has_perimeter_law(mode);
  const bool area = has_area_law(mode);
  const Eigen::Index k = (per ? 1 : 0) + (area ? 1 : 0);

  Triplets t;
  t.reserve(static_cast<std::size_t>(b.P.nonZeros() + b.Q.nonZeros() + b.R.nonZeros() + b.Pk.nonZeros()));
  append_block(t, b.P, 0, 0);
  append_block(t, b.Q, 0, 2 * n);
  append_block(t, b.R, n, 0);
  append_block(t, b.Pk, n, 2 * n);

  linalg::BorderedSystem s;
  s.core = from_triplets(3 * n, 3 * n, t);
  s.border_cols = Eigen::MatrixXd::Zero(3 * n, k);
  s.border_rows = Eigen::MatrixXd::Zero(k, 3 * n);
  s.rhs.resize(3 * n + k);
  s.rhs.head(n) = b.F1;
  s.rhs.segment(n, 2 * n) = b.F2;
  Eigen::Index col = 0;
  if (per) {
    s.border_cols.col(col).head(n) = b.a1;
    s.border_rows.row(col).head(2 * n) = b.b1.transpose();
    s.border_rows.row(col).tail(n) = b.b2.transpose();
    s.rhs[3 * n + col] = b.f1;
    ++col;
  }
  if (area) {
    s.border_cols.col(col).head(n) = b.a2;
    s.border_rows.row(col).head(2 * n) = b.c.transpose();
    s.rhs[3 * n + col] = b.f2;
  }
  return s;
}

}  // namespace curveflow::fem
