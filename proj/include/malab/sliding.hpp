#pragma once

// Contact engines: generalized paraboloids slid from below (measure estimate)
// and the barrier-modified slide against -(v+1)^{-eps} (doubling estimate),
// with dual-route Jacobians and the per-contact first-order identities.

#include <optional>
#include <vector>

#include "malab/classical.hpp"
#include "malab/fields.hpp"
#include "malab/normalization.hpp"
#include "malab/sections.hpp"

namespace malab {

// P(x) = C - a [u(x) - u(y) - Du(y).(x - y)]
struct GeneralizedParaboloid {
  double opening = 1.0;
  Vec vertex;
  const Potential* potential = nullptr;
  double offset = 0.0;

  double bracket(const Vec& x) const {
    return potential->value(x) - potential->value(vertex) -
           potential->grad(vertex).dot(x - vertex);
  }
  double value(const Vec& x) const { return offset - opening * bracket(x); }
};

struct ContactRecord {
  Vec vertex;
  Vec contact;            // sub-cell refined location
  std::int64_t cell = -1; // winning cell
  double opening = 0;
  double v_at_contact = 0;
  Vec dv_at_contact;
  double objective_at_contact = 0;
  double jacobian_formula = 0;  // det(D2u(x) + a^{-1} D2v(x)) / det D2u(y)
  double jacobian_fd = 0;       // 0 when the vertex stencil degenerates
  bool fd_degenerate = true;
  bool on_boundary = false;
  bool refined_confirmed = true;  // half-step re-scan agreed with the cell scan
  double foc_residual = 0;        // |Du(y) - Du(x) - a^{-1} Dv(x)|
};

struct SlideOptions {
  bool parallel = true;
  bool fd_jacobian = false;  // also slide the 2n vertex-stencil neighbors
};

// Contact of v + a[u - tangent plane at y] over the closure of the domain
// (member plus boundary cells). Ties break toward the smaller cell index.
ContactRecord slideParaboloid(const Potential& u, const SmoothField& v, const Vec& y,
                              double a, const SectionSet& domain,
                              const SlideOptions& opts = {});

enum class RunStatus { ok, not_applicable, containment_failure, diagnostic_violation };

struct MeasureEstimateParams {
  double t0 = 1.0;
  double alpha1 = 0.0625;
  double opening = 12.0;
  // Slide every k-th vertex cell. The area-formula identity |V| vs the
  // contact integral is only meaningful at stride 1.
  std::int64_t vertex_stride = 1;
};

struct MeasureEstimateReport {
  RunStatus status = RunStatus::ok;
  std::vector<ContactRecord> records;
  double inf_v_on_vertices = 0;
  double interior_fraction = 0;
  double m1_emp = 0;           // max v over contacts
  double vertex_measure = 0;   // |V|
  double area_integral = 0;    // sum over contact cells of |det D_x y| * cell
  double below_fraction = 0;   // |{v < m1_emp} tested on S_1| / |S_1|
  int boundary_contacts = 0;
  double failing_opening = 0;  // set when status == containment_failure
};

// Slides from every vertex cell of V = S_u(xc, alpha1 t0); contacts are
// sought in S_u(xc, t0). Requires inf_V v <= 1, otherwise not_applicable.
MeasureEstimateReport measureEstimateRun(const ProblemInstance& P, const SmoothField& v,
                                         const MeasureEstimateParams& params);

struct DoublingParams {
  double t0 = 1.0;
  double alpha = 0.1;
  double eps = 0.02;
  double beta = 0.01;  // vertex section height
};

// Contact domain and the inner exclusion set, shared across a vertex sweep.
struct DoublingSetup {
  SectionSet s3;       // S_u(xc, 3 t0)
  SectionSet s_alpha;  // S_u(xc, alpha t0)
};

DoublingSetup prepareDoubling(const ProblemInstance& P, const DoublingParams& params);

// Admissible cap on eps from the doubling argument's parameter conditions.
double doublingEpsCap(const DoublingParams& params, double delta, double lambda_t,
                      double Lambda_t, int n);

struct DiagnosticCheck {
  bool applicable = false;
  bool pass = false;
  double lhs = 0, rhs = 0;
};

struct DoublingRecord {
  ContactRecord contact;       // v fields hold w-values where noted below
  double v_at_contact = 0;
  Vec dv_at_contact;
  double dw_norm = 0;
  DiagnosticCheck in_annulus;      // x in S_3 \ S_alpha
  DiagnosticCheck value_capped;    // (v(x)+1)^eps <= 1/alpha
  DiagnosticCheck dw_lower;         // |Dw(x)| >= alpha / (2n)
  DiagnosticCheck dv_lower;         // |Dv(x)| >= alpha / (2 n eps)
  double jacobian_formula = 0; // det(D2u(x) - D2h(x) - (4/3) D2w(x)) / det D2u(y)
  RunStatus status = RunStatus::ok;
  std::string violated;        // first failed diagnostic, empty when all pass
};

// One barrier-modified slide: maximize Q_y = w - (3/4)[u - tangent at y - h].
// The witness x0 with v(x0) <= 1 gates applicability of the diagnostics.
DoublingRecord doublingContact(const ProblemInstance& P, const SmoothField& v,
                               const Vec& y, const SmoothField& h_barrier,
                               const std::optional<Vec>& witness,
                               const DoublingParams& params, const DoublingSetup& setup,
                               const SlideOptions& opts = {});

// |det D_x y| <= C (one? + |b|^n + |c^-|^n + |f^+|^n) at the contact point.
BoundCheck jacobianBoundCheck(double jacobian, const Vec& contact,
                              const ProblemInstance& P, double C, bool include_one);

struct GradientFilterReport {
  std::vector<std::size_t> kept;  // indices into the input
  double threshold = 0;
  double retention = 1.0;
};

// Retains records whose |Dv(x)| reaches alpha/(2 n eps); the doubling theory
// says this keeps everything, so retention is reported, not silently assumed.
GradientFilterReport largeGradientFilter(const std::vector<DoublingRecord>& records,
                                         double eps, double alpha, int n);

}  // namespace malab
