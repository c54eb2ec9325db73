//! Parameterized model problems and their discrete operators.
//!
//! Two problems are provided, each with two scalar parameters `beta_1`,
//! `beta_2` of which one is active at a time:
//!
//! * portal frame: beam `BC` has `EI = beta_1 EI0`, it carries the uniform
//!   transverse load `beta_2^2 q0`, and `P0 = q0 l` acts horizontally at `C`;
//! * membrane on an elastic foundation over `(0,1)^2`: `a = beta_1`, `k = 1`,
//!   and `f = 1` on `(0.5 - beta_2, 0.5 + beta_2)^2`.
//!
//! For the active parameter the problem also carries `K'`, `f'` so that the
//! block pair `{u, U = xi u'}` can be formed.

use crate::error::{Error, Result};
use crate::linalg::{SpdFactor, SymSparse, TripletBuilder};
use crate::mesh::{
    build_frame_mesh, build_quad_mesh, frame, BeamElement, DofKind, Mesh1D, Mesh2D, PortalFrame,
    StiffnessProfile,
};
use crate::poly::Poly;
use crate::quadrature::gauss_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    Beta1,
    Beta2,
}

impl Parameter {
    pub fn index(self) -> usize {
        match self {
            Parameter::Beta1 => 0,
            Parameter::Beta2 => 1,
        }
    }
}

/// Mean parameter values of the portal frame.
pub const FRAME_MEAN: [f64; 2] = [1.0, 1.0];
/// Mean parameter values of the membrane.
pub const MEMBRANE_MEAN: [f64; 2] = [1.0, 0.125];
/// QoI subdomain of the membrane.
pub const MEMBRANE_QOI_BOX: ([f64; 2], [f64; 2]) = ([0.5, 0.5], [0.625, 0.625]);

/// Beam data resolved at the current parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    pub mesh: Mesh1D,
    /// `EI(s)` per member, polynomial in the member coordinate.
    pub ei: Vec<Poly>,
    /// `d EI / d beta` per member.
    pub ei_prime: Vec<Poly>,
    /// Uniform transverse load per member (along the member's `w`).
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    /// Nodal loads on free DOFs.
    pub point_loads: Vec<(usize, f64)>,
    pub point_loads_prime: Vec<(usize, f64)>,
}

/// Membrane load: constant density per cell plus constant line density per
/// edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneLoad {
    pub cell: Vec<f64>,
    pub edge: Vec<f64>,
}

impl MembraneLoad {
    pub fn zeros(mesh: &Mesh2D) -> Self {
        MembraneLoad {
            cell: vec![0.0; mesh.n_cells()],
            edge: vec![0.0; mesh.n_edges()],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        MembraneLoad {
            cell: self.cell.iter().map(|v| v * s).collect(),
            edge: self.edge.iter().map(|v| v * s).collect(),
        }
    }

    /// `int f + int_edges g`.
    pub fn total(&self, mesh: &Mesh2D) -> f64 {
        let h = mesh.h;
        self.cell.iter().sum::<f64>() * h * h + self.edge.iter().sum::<f64>() * h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembraneModel {
    pub mesh: Mesh2D,
    pub a: f64,
    pub a_prime: f64,
    pub k: f64,
    pub k_prime: f64,
    pub load: MembraneLoad,
    pub load_prime: MembraneLoad,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Beam(BeamModel),
    Membrane(MembraneModel),
}

/// The variational problem at the current parameter values together with
/// the derivative data for the active parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamProblem {
    pub model: ModelKind,
    pub parameter: Parameter,
    pub betas: [f64; 2],
    pub xi: f64,
}

impl ParamProblem {
    /// Portal frame at parameter values `betas`.
    pub fn portal_frame(
        geometry: &PortalFrame,
        n_per_member: usize,
        parameter: Parameter,
        betas: [f64; 2],
        xi: f64,
    ) -> Result<Self> {
        let mesh = build_frame_mesh(geometry, n_per_member)?;
        let q0 = 1.0;
        let mut ei = Vec::new();
        let mut ei_prime = Vec::new();
        for m in &mesh.members {
            let (p, dp) = match m.stiffness_profile {
                StiffnessProfile::Tapered { ei0 } => {
                    let l = m.length;
                    (
                        Poly::new(vec![ei0, 2.0 * ei0 / l, ei0 / (l * l)]),
                        Poly::zero(),
                    )
                }
                StiffnessProfile::Parameterized { ei0 } => (
                    Poly::constant(betas[0] * ei0),
                    if parameter == Parameter::Beta1 {
                        Poly::constant(ei0)
                    } else {
                        Poly::zero()
                    },
                ),
                StiffnessProfile::Uniform { ei } => (Poly::constant(ei), Poly::zero()),
            };
            ei.push(p);
            ei_prime.push(dp);
        }
        let mut q = vec![0.0; mesh.members.len()];
        let mut q_prime = vec![0.0; mesh.members.len()];
        q[frame::BEAM_BC] = betas[1] * betas[1] * q0;
        if parameter == Parameter::Beta2 {
            q_prime[frame::BEAM_BC] = 2.0 * betas[1] * q0;
        }
        let p0 = q0 * geometry.height;
        let model = BeamModel {
            mesh,
            ei,
            ei_prime,
            q,
            q_prime,
            point_loads: vec![(frame::SWAY, p0)],
            point_loads_prime: Vec::new(),
        };
        ParamProblem::new(ModelKind::Beam(model), parameter, betas, xi)
    }

    /// Membrane on an elastic foundation on an `n x n` mesh.
    pub fn membrane(n: usize, parameter: Parameter, betas: [f64; 2], xi: f64) -> Result<Self> {
        let mesh = build_quad_mesh(n)?;
        let half = betas[1];
        let lo = [0.5 - half, 0.5 - half];
        let hi = [0.5 + half, 0.5 + half];
        let mut load = MembraneLoad::zeros(&mesh);
        for c in mesh.cells_in_box(lo, hi)? {
            load.cell[c] = 1.0;
        }
        let mut load_prime = MembraneLoad::zeros(&mesh);
        if parameter == Parameter::Beta2 {
            // d/d beta_2 of int_{Omega_f} v is the unit line load on the
            // boundary of Omega_f (it moves outward with unit normal speed)
            for e in mesh.box_boundary_edges(lo, hi)? {
                load_prime.edge[e] = 1.0;
            }
        }
        let model = MembraneModel {
            mesh,
            a: betas[0],
            a_prime: if parameter == Parameter::Beta1 { 1.0 } else { 0.0 },
            k: 1.0,
            k_prime: 0.0,
            load,
            load_prime,
        };
        ParamProblem::new(ModelKind::Membrane(model), parameter, betas, xi)
    }

    /// Wraps a model; rejects `xi` outside the admissible coupling range.
    pub fn new(model: ModelKind, parameter: Parameter, betas: [f64; 2], xi: f64) -> Result<Self> {
        let problem = ParamProblem {
            model,
            parameter,
            betas,
            xi,
        };
        let v = crate::sensitivity::validate_xi(&problem);
        if !(xi > 0.0 && xi < v.xi_max) {
            return Err(Error::XiOutOfRange { xi, xi_max: v.xi_max });
        }
        Ok(problem)
    }

    pub fn n_dofs(&self) -> usize {
        match &self.model {
            ModelKind::Beam(b) => b.mesh.n_free,
            ModelKind::Membrane(m) => m.mesh.n_nodes(),
        }
    }

    /// Mesh size `h` (element length or cell side).
    pub fn h(&self) -> f64 {
        match &self.model {
            ModelKind::Beam(b) => b.mesh.h(),
            ModelKind::Membrane(m) => m.mesh.h,
        }
    }

    pub fn assemble(&self, rel_tol: f64) -> Result<AssembledProblem> {
        let k = assemble_operator(self, Operator::K)?;
        let k_prime = assemble_operator(self, Operator::KPrime)?;
        let f = assemble_load(self, Load::F)?;
        let f_prime = assemble_load(self, Load::FPrime)?;
        let factor = SpdFactor::new(&k, rel_tol)?;
        Ok(AssembledProblem {
            problem: self.clone(),
            k,
            k_prime,
            f,
            f_prime,
            factor,
        })
    }
}

/// Global operators and loads of a problem with a reusable factorization
/// of `K`.
#[derive(Debug, Clone)]
pub struct AssembledProblem {
    pub problem: ParamProblem,
    pub k: SymSparse,
    pub k_prime: SymSparse,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub factor: SpdFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    K,
    KPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Load {
    F,
    FPrime,
}

/// Element-level pieces of `a_u`, `a'_u`, `<f, .>` and `<f', .>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub stiffness: [[f64; 4]; 4],
    pub stiffness_prime: [[f64; 4]; 4],
    pub load: [f64; 4],
    pub load_prime: [f64; 4],
}

/// Cubic Hermite shape functions on `[0, h]` in the order
/// `(w_a, theta_a, w_b, theta_b)`.
pub fn hermite_basis(h: f64) -> [Poly; 4] {
    let (h2, h3) = (h * h, h * h * h);
    [
        Poly::new(vec![1.0, 0.0, -3.0 / h2, 2.0 / h3]),
        Poly::new(vec![0.0, 1.0, -2.0 / h, 1.0 / h2]),
        Poly::new(vec![0.0, 0.0, 3.0 / h2, -2.0 / h3]),
        Poly::new(vec![0.0, 0.0, -1.0 / h, 1.0 / h2]),
    ]
}

/// Second derivatives of [`hermite_basis`].
pub fn hermite_curvatures(h: f64) -> [Poly; 4] {
    let b = hermite_basis(h);
    [
        b[0].derivative().derivative(),
        b[1].derivative().derivative(),
        b[2].derivative().derivative(),
        b[3].derivative().derivative(),
    ]
}

/// Hermite bending element: `int EI N_i'' N_j''`, `int EI' N_i'' N_j''` and
/// consistent loads for uniform `q`, `q'`. `ei` and `ei_prime` are given in
/// the element coordinate `x in [0, h]`; integrals are exact.
pub fn element_beam(h: f64, ei: &Poly, ei_prime: &Poly, q: f64, q_prime: f64) -> Result<ElementMatrices> {
    if !(h > 0.0) {
        return Err(Error::InvalidGeometry(format!("element length {h} must be positive")));
    }
    let c = hermite_curvatures(h);
    let mut stiffness = [[0.0; 4]; 4];
    let mut stiffness_prime = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let prod = &c[i] * &c[j];
            let kij = (&prod * ei).integrate(0.0, h);
            let kpij = (&prod * ei_prime).integrate(0.0, h);
            stiffness[i][j] = kij;
            stiffness[j][i] = kij;
            stiffness_prime[i][j] = kpij;
            stiffness_prime[j][i] = kpij;
        }
    }
    let unit = [h / 2.0, h * h / 12.0, h / 2.0, -h * h / 12.0];
    Ok(ElementMatrices {
        stiffness,
        stiffness_prime,
        load: unit.map(|v| q * v),
        load_prime: unit.map(|v| q_prime * v),
    })
}

/// Local coordinate polynomials of member data for one element.
pub(crate) fn beam_element_coeffs(model: &BeamModel, e: &BeamElement) -> (Poly, Poly) {
    (
        model.ei[e.member].shifted(e.s_a),
        model.ei_prime[e.member].shifted(e.s_a),
    )
}

/// Bilinear square element of side `h`: `a * (Laplace part) + k * (mass)`
/// with `2 x 2` Gauss integration (exact for these integrands); loads are
/// for a unit uniform density.
pub fn element_quad(h: f64, a: f64, k: f64) -> ElementMatrices {
    let rule = gauss_rule(2, 2).expect("2-point rule");
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut stiffness = [[0.0; 4]; 4];
    let mut load = [0.0; 4];
    let jac = h * h / 4.0;
    for (p, w) in rule.iter() {
        let (xi, eta) = (p[0], p[1]);
        let mut n = [0.0; 4];
        let mut gx = [0.0; 4];
        let mut gy = [0.0; 4];
        for (a_, &(xa, ya)) in corners.iter().enumerate() {
            n[a_] = 0.25 * (1.0 + xa * xi) * (1.0 + ya * eta);
            gx[a_] = 0.25 * xa * (1.0 + ya * eta) * 2.0 / h;
            gy[a_] = 0.25 * ya * (1.0 + xa * xi) * 2.0 / h;
        }
        for i in 0..4 {
            load[i] += w * jac * n[i];
            for j in 0..4 {
                stiffness[i][j] += w * jac * (a * (gx[i] * gx[j] + gy[i] * gy[j]) + k * n[i] * n[j]);
            }
        }
    }
    ElementMatrices {
        stiffness,
        stiffness_prime: [[0.0; 4]; 4],
        load,
        load_prime: [0.0; 4],
    }
}

/// Assembles `K` or `K'` over free DOFs.
pub fn assemble_operator(problem: &ParamProblem, which: Operator) -> Result<SymSparse> {
    let n = problem.n_dofs();
    let mut t = TripletBuilder::new(n);
    match &problem.model {
        ModelKind::Beam(b) => {
            for e in &b.mesh.elements {
                let (ei, eip) = beam_element_coeffs(b, e);
                let em = element_beam(e.length(), &ei, &eip, 0.0, 0.0)?;
                let m = match which {
                    Operator::K => &em.stiffness,
                    Operator::KPrime => &em.stiffness_prime,
                };
                for i in 0..4 {
                    for j in 0..4 {
                        if let (Some(gi), Some(gj)) = (e.dofs[i], e.dofs[j]) {
                            if gj <= gi {
                                t.add_lower(gi, gj, m[i][j]);
                            }
                        }
                    }
                }
            }
        }
        ModelKind::Membrane(mm) => {
            let (a, k) = match which {
                Operator::K => (mm.a, mm.k),
                Operator::KPrime => (mm.a_prime, mm.k_prime),
            };
            if a == 0.0 && k == 0.0 {
                return Ok(SymSparse::zeros(n));
            }
            let em = element_quad(mm.mesh.h, a, k);
            for c in 0..mm.mesh.n_cells() {
                let nodes = mm.mesh.cell_nodes(c);
                for i in 0..4 {
                    for j in 0..4 {
                        t.add_full(nodes[i], nodes[j], em.stiffness[i][j]);
                    }
                }
            }
        }
    }
    Ok(t.build())
}

/// Consistent load vector for `f` or `f'`.
pub fn assemble_load(problem: &ParamProblem, which: Load) -> Result<Vec<f64>> {
    let mut out = vec![0.0; problem.n_dofs()];
    match &problem.model {
        ModelKind::Beam(b) => {
            let (q, pts) = match which {
                Load::F => (&b.q, &b.point_loads),
                Load::FPrime => (&b.q_prime, &b.point_loads_prime),
            };
            for e in &b.mesh.elements {
                let qe = q[e.member];
                if qe == 0.0 {
                    continue;
                }
                let em = element_beam(e.length(), &Poly::zero(), &Poly::zero(), qe, 0.0)?;
                for i in 0..4 {
                    if let Some(g) = e.dofs[i] {
                        out[g] += em.load[i];
                    }
                }
            }
            for &(d, v) in pts {
                out[d] += v;
            }
        }
        ModelKind::Membrane(m) => {
            let load = match which {
                Load::F => &m.load,
                Load::FPrime => &m.load_prime,
            };
            membrane_load_vector(&m.mesh, load, &mut out);
        }
    }
    Ok(out)
}

/// Adds the consistent nodal vector of a membrane load to `out`.
pub fn membrane_load_vector(mesh: &Mesh2D, load: &MembraneLoad, out: &mut [f64]) {
    let h = mesh.h;
    for (c, &v) in load.cell.iter().enumerate() {
        if v != 0.0 {
            for n in mesh.cell_nodes(c) {
                out[n] += v * h * h / 4.0;
            }
        }
    }
    for (e, &g) in load.edge.iter().enumerate() {
        if g != 0.0 {
            for n in mesh.edge_nodes(e) {
                out[n] += g * h / 2.0;
            }
        }
    }
}

/// Where a linear quantity of interest reads the displacement field.
#[derive(Debug, Clone, PartialEq)]
pub enum QoiTarget {
    /// Nodal deflection or rotation of a frame member at coordinate `s`.
    BeamNode { member: usize, s: f64, kind: DofKind },
    /// Average of the membrane deflection over the box `[lo, hi]`.
    SubdomainAverage { lo: [f64; 2], hi: [f64; 2] },
    /// Caller-supplied extraction vector (for linearized nonlinear outputs).
    /// On the membrane the functional's density must accompany it.
    Custom {
        g: Vec<f64>,
        density: Option<MembraneLoad>,
    },
}

/// A linear extraction functional `J` with `g_i = J(N_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QoI {
    pub target: QoiTarget,
    pub g: Vec<f64>,
    /// The functional as a membrane load (cells/edges); `None` on beams,
    /// where `g` itself is the nodal load.
    pub density: Option<MembraneLoad>,
}

impl QoI {
    pub fn value(&self, field: &[f64]) -> f64 {
        crate::linalg::dot(&self.g, field)
    }
}

/// Builds the extraction vector of a QoI on the problem's mesh.
pub fn assemble_qoi(problem: &ParamProblem, target: QoiTarget) -> Result<QoI> {
    let n = problem.n_dofs();
    let (g, density) = match (&problem.model, &target) {
        (ModelKind::Beam(b), QoiTarget::BeamNode { member, s, kind }) => {
            let dof = b.mesh.node_dof(*member, *s, *kind)?.ok_or_else(|| {
                Error::TargetNotFound(format!(
                    "{kind:?} at s = {s} on member {member} is constrained"
                ))
            })?;
            let mut g = vec![0.0; n];
            g[dof] = 1.0;
            (g, None)
        }
        (ModelKind::Membrane(m), QoiTarget::SubdomainAverage { lo, hi }) => {
            let cells = m.mesh.cells_in_box(*lo, *hi)?;
            let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            let mut density = MembraneLoad::zeros(&m.mesh);
            for c in cells {
                density.cell[c] = 1.0 / area;
            }
            let mut g = vec![0.0; n];
            membrane_load_vector(&m.mesh, &density, &mut g);
            (g, Some(density))
        }
        (_, QoiTarget::Custom { g, density }) => {
            if g.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.len(),
                });
            }
            if matches!(problem.model, ModelKind::Membrane(_)) && density.is_none() {
                return Err(Error::InvalidInput(
                    "a custom membrane QoI needs its load density".into(),
                ));
            }
            (g.clone(), density.clone())
        }
        _ => {
            return Err(Error::TargetNotFound(
                "QoI target does not match the model".into(),
            ))
        }
    };
    if g.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput("extraction vector is zero".into()));
    }
    Ok(QoI { target, g, density })
}

/// Non-dimensional horizontal displacement at C.
pub fn frame_sway_at_c(geometry: &PortalFrame) -> QoiTarget {
    QoiTarget::BeamNode {
        member: frame::COLUMN_DC,
        s: geometry.height,
        kind: DofKind::Deflection,
    }
}

/// Non-dimensional (clockwise) rotation at B.
pub fn frame_rotation_at_b(geometry: &PortalFrame) -> QoiTarget {
    QoiTarget::BeamNode {
        member: frame::COLUMN_AB,
        s: geometry.height,
        kind: DofKind::Rotation,
    }
}

pub fn membrane_average() -> QoiTarget {
    QoiTarget::SubdomainAverage {
        lo: MEMBRANE_QOI_BOX.0,
        hi: MEMBRANE_QOI_BOX.1,
    }
}
