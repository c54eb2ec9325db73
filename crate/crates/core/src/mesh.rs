//! Frame meshes of Hermite beam elements and uniform square meshes of the
//! unit square.
//!
//! Beam conventions: every member has a unit axis `t` from its start joint to
//! its end joint; the transverse deflection `w` is measured along `t` rotated
//! clockwise by 90 degrees, so the nodal rotation `dw/ds` is a clockwise
//! rotation in the global frame and members meeting at a rigid joint share
//! the same rotation DOF without sign changes.

use crate::error::{Error, Result};

/// Flexural stiffness profile of a member along its axial coordinate `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StiffnessProfile {
    /// `EI(s) = ei0 (1 + s / L)^2`.
    Tapered { ei0: f64 },
    /// `EI = beta_1 * ei0`, scaled by the first parameter.
    Parameterized { ei0: f64 },
    /// Parameter-independent constant.
    Uniform { ei: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub start_node: usize,
    pub end_node: usize,
    pub length: f64,
    pub axis_direction: [f64; 2],
    pub stiffness_profile: StiffnessProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Deflection,
    Rotation,
}

/// One Hermite element: a sub-interval of a member and its four local DOFs
/// `(w_a, theta_a, w_b, theta_b)` mapped to free global indices (`None` for
/// constrained values).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamElement {
    pub member: usize,
    pub s_a: f64,
    pub s_b: f64,
    pub dofs: [Option<usize>; 4],
}

impl BeamElement {
    pub fn length(&self) -> f64 {
        self.s_b - self.s_a
    }
}

/// Boundary condition at a member end, as DOF slots for `(w, theta)`.
/// `None` fixes the value to zero; `Some(i)` ties it to shared DOF `i`.
pub type EndSlots = (Option<usize>, Option<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub nodes: Vec<[f64; 2]>,
    pub members: Vec<Member>,
    pub elements: Vec<BeamElement>,
    pub n_free: usize,
    pub n_per_member: usize,
}

impl Mesh1D {
    /// Generic constructor: `ends[m]` gives the start/end slots of member `m`
    /// in terms of `n_shared` pre-allocated shared DOFs; interior nodes get
    /// fresh DOFs numbered member by member after the shared ones.
    pub fn from_members(
        nodes: Vec<[f64; 2]>,
        members: Vec<Member>,
        ends: &[(EndSlots, EndSlots)],
        n_shared: usize,
        n_per_member: usize,
    ) -> Result<Self> {
        if n_per_member == 0 {
            return Err(Error::InvalidMesh("n_per_member must be at least 1".into()));
        }
        if ends.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                got: ends.len(),
            });
        }
        for (i, m) in members.iter().enumerate() {
            if !(m.length > 0.0) || !m.length.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "member {i} has non-positive length {}",
                    m.length
                )));
            }
            let norm = m.axis_direction[0].hypot(m.axis_direction[1]);
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGeometry(format!(
                    "member {i} axis direction is not a unit vector"
                )));
            }
        }
        let mut next = n_shared;
        let mut elements = Vec::with_capacity(members.len() * n_per_member);
        for (mi, (m, &(start, end))) in members.iter().zip(ends).enumerate() {
            let mut slots: Vec<EndSlots> = Vec::with_capacity(n_per_member + 1);
            slots.push(start);
            for _ in 1..n_per_member {
                slots.push((Some(next), Some(next + 1)));
                next += 2;
            }
            slots.push(end);
            let h = m.length / n_per_member as f64;
            for e in 0..n_per_member {
                let s_a = e as f64 * h;
                let s_b = if e + 1 == n_per_member {
                    m.length
                } else {
                    (e + 1) as f64 * h
                };
                elements.push(BeamElement {
                    member: mi,
                    s_a,
                    s_b,
                    dofs: [slots[e].0, slots[e].1, slots[e + 1].0, slots[e + 1].1],
                });
            }
        }
        Ok(Mesh1D {
            nodes,
            members,
            elements,
            n_free: next,
            n_per_member,
        })
    }

    /// Characteristic element size (length of the longest element).
    pub fn h(&self) -> f64 {
        self.elements
            .iter()
            .map(BeamElement::length)
            .fold(0.0, f64::max)
    }

    pub fn elements_of(&self, member: usize) -> impl Iterator<Item = (usize, &BeamElement)> {
        self.elements
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.member == member)
    }

    /// Free DOF of a nodal value at axial position `s` of `member`.
    /// Returns `Ok(None)` if the value is constrained to zero.
    pub fn node_dof(&self, member: usize, s: f64, kind: DofKind) -> Result<Option<usize>> {
        let off = match kind {
            DofKind::Deflection => 0,
            DofKind::Rotation => 1,
        };
        let tol = 1e-12 * self.members.get(member).map_or(1.0, |m| m.length);
        for (_, e) in self.elements_of(member) {
            if (e.s_a - s).abs() <= tol {
                return Ok(e.dofs[off]);
            }
            if (e.s_b - s).abs() <= tol {
                return Ok(e.dofs[2 + off]);
            }
        }
        Err(Error::TargetNotFound(format!(
            "no node at s = {s} on member {member}"
        )))
    }
}

/// Portal frame: columns AB and DC of height `height` fixed at A and D,
/// beam BC of length `span`, rigid joints at B and C, axially rigid members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortalFrame {
    pub height: f64,
    pub span: f64,
    pub ei0: f64,
}

impl Default for PortalFrame {
    fn default() -> Self {
        PortalFrame {
            height: 1.0,
            span: 1.0,
            ei0: 1.0,
        }
    }
}

/// Member indices of the portal frame.
pub mod frame {
    pub const COLUMN_AB: usize = 0;
    pub const BEAM_BC: usize = 1;
    pub const COLUMN_DC: usize = 2;
    /// Shared horizontal translation of B and C.
    pub const SWAY: usize = 0;
    pub const THETA_B: usize = 1;
    pub const THETA_C: usize = 2;
}

/// Builds the portal frame mesh with `n_per_member` equal elements per member.
///
/// DOF layout: `0` sway, `1` rotation at B, `2` rotation at C, then interior
/// node pairs `(w, theta)` of AB, BC and DC in that order. Column stiffness
/// grows from the support toward the joint.
pub fn build_frame_mesh(frame: &PortalFrame, n_per_member: usize) -> Result<Mesh1D> {
    if !(frame.height > 0.0) || !(frame.span > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "portal frame needs positive height and span, got {} x {}",
            frame.height, frame.span
        )));
    }
    if !(frame.ei0 > 0.0) {
        return Err(Error::InvalidGeometry("EI0 must be positive".into()));
    }
    let (l, b) = (frame.height, frame.span);
    let nodes = vec![[0.0, 0.0], [0.0, l], [b, l], [b, 0.0]];
    let column = |start, end| Member {
        start_node: start,
        end_node: end,
        length: l,
        axis_direction: [0.0, 1.0],
        stiffness_profile: StiffnessProfile::Tapered { ei0: frame.ei0 },
    };
    let members = vec![
        column(0, 1),
        Member {
            start_node: 1,
            end_node: 2,
            length: b,
            axis_direction: [1.0, 0.0],
            stiffness_profile: StiffnessProfile::Parameterized { ei0: frame.ei0 },
        },
        column(3, 2),
    ];
    use frame::*;
    let fixed: EndSlots = (None, None);
    let ends = [
        (fixed, (Some(SWAY), Some(THETA_B))),
        ((None, Some(THETA_B)), (None, Some(THETA_C))),
        (fixed, (Some(SWAY), Some(THETA_C))),
    ];
    Mesh1D::from_members(nodes, members, &ends, 3, n_per_member)
}

/// End condition of a single-span beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanEnd {
    Clamped,
    Pinned,
    Free,
}

/// A single straight member on `[0, length]`, used for closed-form checks.
pub fn build_single_span(
    length: f64,
    n_elements: usize,
    left: SpanEnd,
    right: SpanEnd,
    profile: StiffnessProfile,
) -> Result<Mesh1D> {
    let mut shared = 0;
    let mut slot = |end: SpanEnd| -> EndSlots {
        let mut take = || {
            shared += 1;
            Some(shared - 1)
        };
        match end {
            SpanEnd::Clamped => (None, None),
            SpanEnd::Pinned => (None, take()),
            SpanEnd::Free => (take(), take()),
        }
    };
    let ends = [(slot(left), slot(right))];
    let member = Member {
        start_node: 0,
        end_node: 1,
        length,
        axis_direction: [1.0, 0.0],
        stiffness_profile: profile,
    };
    Mesh1D::from_members(
        vec![[0.0, 0.0], [length, 0.0]],
        vec![member],
        &ends,
        shared,
        n_elements,
    )
}

/// Uniform mesh of `(0,1)^2` with `n x n` square cells.
///
/// Node `(i, j)` sits at `(i h, j h)` with index `j (n+1) + i`. Cell `(i, j)`
/// has lower-left node `(i, j)` and index `j n + i`; its nodes are listed
/// counterclockwise. Horizontal edge `(i, j)` joins nodes `(i, j)-(i+1, j)`
/// and has index `j n + i`; vertical edge `(i, j)` joins `(i, j)-(i, j+1)` and
/// has index `n (n+1) + j (n+1) + i`. Edge normals are `+y` for horizontal
/// and `+x` for vertical edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub n: usize,
    pub h: f64,
}

impl Mesh2D {
    pub fn n_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn n_edges(&self) -> usize {
        2 * self.n * (self.n + 1)
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn node_position(&self, idx: usize) -> [f64; 2] {
        let i = idx % (self.n + 1);
        let j = idx / (self.n + 1);
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.n, c / self.n)
    }

    pub fn cell_origin(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(c);
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let o = self.cell_origin(c);
        [o[0] + 0.5 * self.h, o[1] + 0.5 * self.h]
    }

    /// Counterclockwise node indices of a cell.
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    pub fn h_edge(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn v_edge(&self, i: usize, j: usize) -> usize {
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    /// Endpoints of an edge (start, end) in increasing coordinate order.
    pub fn edge_nodes(&self, e: usize) -> [usize; 2] {
        let nh = self.n * (self.n + 1);
        if e < nh {
            let (i, j) = (e % self.n, e / self.n);
            [self.node(i, j), self.node(i + 1, j)]
        } else {
            let k = e - nh;
            let (i, j) = (k % (self.n + 1), k / (self.n + 1));
            [self.node(i, j), self.node(i, j + 1)]
        }
    }

    pub fn is_horizontal(&self, e: usize) -> bool {
        e < self.n * (self.n + 1)
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        let nh = self.n * (self.n + 1);
        if e < nh {
            let j = e / self.n;
            j == 0 || j == self.n
        } else {
            let i = (e - nh) % (self.n + 1);
            i == 0 || i == self.n
        }
    }

    /// Edges of a cell as `(bottom, right, top, left)` with the sign of the
    /// edge normal relative to the outward cell normal.
    pub fn cell_edges(&self, c: usize) -> [(usize, f64); 4] {
        let (i, j) = self.cell_ij(c);
        [
            (self.h_edge(i, j), -1.0),
            (self.v_edge(i + 1, j), 1.0),
            (self.h_edge(i, j + 1), 1.0),
            (self.v_edge(i, j), -1.0),
        ]
    }

    /// Cells adjacent to an edge: `(minus side, plus side)` relative to the
    /// edge normal.
    pub fn edge_cells(&self, e: usize) -> (Option<usize>, Option<usize>) {
        let nh = self.n * (self.n + 1);
        if e < nh {
            let (i, j) = (e % self.n, e / self.n);
            let below = (j > 0).then(|| self.cell(i, j - 1));
            let above = (j < self.n).then(|| self.cell(i, j));
            (below, above)
        } else {
            let k = e - nh;
            let (i, j) = (k % (self.n + 1), k / (self.n + 1));
            let left = (i > 0).then(|| self.cell(i - 1, j));
            let right = (i < self.n).then(|| self.cell(i, j));
            (left, right)
        }
    }

    /// Mesh-line index of coordinate `x`, if `x` lies on a mesh line.
    pub fn grid_index(&self, x: f64) -> Option<usize> {
        let k = x * self.n as f64;
        let r = k.round();
        ((k - r).abs() <= 1e-9 && r >= 0.0 && r <= self.n as f64).then_some(r as usize)
    }

    /// Cells covering the axis-aligned box `[lo, hi]^2` exactly.
    pub fn cells_in_box(&self, lo: [f64; 2], hi: [f64; 2]) -> Result<Vec<usize>> {
        let idx = |x: f64| {
            self.grid_index(x).ok_or_else(|| {
                Error::Misaligned(format!(
                    "coordinate {x} is not on a mesh line of the {n}x{n} mesh",
                    n = self.n
                ))
            })
        };
        let (i0, i1) = (idx(lo[0])?, idx(hi[0])?);
        let (j0, j1) = (idx(lo[1])?, idx(hi[1])?);
        if i1 <= i0 || j1 <= j0 {
            return Err(Error::Misaligned("empty box".into()));
        }
        Ok((j0..j1)
            .flat_map(|j| (i0..i1).map(move |i| (i, j)))
            .map(|(i, j)| self.cell(i, j))
            .collect())
    }

    /// Edges on the boundary of the axis-aligned box `[lo, hi]^2`.
    pub fn box_boundary_edges(&self, lo: [f64; 2], hi: [f64; 2]) -> Result<Vec<usize>> {
        let idx = |x: f64| {
            self.grid_index(x)
                .ok_or_else(|| Error::Misaligned(format!("coordinate {x} is off the mesh lines")))
        };
        let (i0, i1) = (idx(lo[0])?, idx(hi[0])?);
        let (j0, j1) = (idx(lo[1])?, idx(hi[1])?);
        let mut edges = Vec::new();
        for i in i0..i1 {
            edges.push(self.h_edge(i, j0));
            edges.push(self.h_edge(i, j1));
        }
        for j in j0..j1 {
            edges.push(self.v_edge(i0, j));
            edges.push(self.v_edge(i1, j));
        }
        edges.sort_unstable();
        Ok(edges)
    }
}

/// Uniform `n x n` mesh of the unit square. `n` must be a power of two so
/// that the load and QoI subdomains used here lie on mesh lines.
pub fn build_quad_mesh(n: usize) -> Result<Mesh2D> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidMesh(format!(
            "quad mesh needs n >= 2 and a power of two so that the load and QoI \
             subdomain boundaries lie on mesh lines; got n = {n}"
        )));
    }
    Ok(Mesh2D {
        n,
        h: 1.0 / n as f64,
    })
}
