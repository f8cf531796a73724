//! Reference implementations of the weak, strong and directly stable forms.
//!
//! Each returns the element residual `R_ij` for every test function
//! `ℓ_i(ξ)ℓ_j(η)`; `R` enters `J w Ů + R = 0` exactly like the production
//! two-point residual. Surface terms appear only on DG and boundary faces. The
//! forms differ element by element but coincide after stiffness summation
//! whenever the discrete metric identities hold. They are kept for
//! verification; the solver uses the two-point form.

use super::{BoundaryProvider, Discretization, GlobalField};
use crate::acoustics::State;
use crate::error::Result;

/// Which residual form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// Weak form: surface flux minus volume terms against test gradients.
    Weak,
    /// Strong split form: averaged conservative and advective derivatives.
    Strong,
    /// Directly stable form: advective strong part plus conservative weak part.
    DirectlyStable,
    /// Two-point flux differencing form used by the solver.
    TwoPoint,
}

impl Form {
    pub const ALL: [Form; 4] = [
        Form::Weak,
        Form::Strong,
        Form::DirectlyStable,
        Form::TwoPoint,
    ];
}

/// Nodal data shared by the reference forms.
struct Local {
    np: usize,
    u: Vec<State>,
    /// Contravariant fluxes `F̃¹ = Ã(Ja¹)U`, `F̃² = Ã(Ja²)U`.
    f1: Vec<State>,
    f2: Vec<State>,
}

impl Discretization {
    fn local_data(&self, element: usize, field: &GlobalField) -> Local {
        let np = self.degree() + 1;
        let u = self.element_values(field, element);
        let m = &self.metrics[element];
        let medium = self.mesh.medium(element);
        let f1 = (0..np * np)
            .map(|k| medium.contravariant_flux(m.ja1[k], &u[k]))
            .collect();
        let f2 = (0..np * np)
            .map(|k| medium.contravariant_flux(m.ja2[k], &u[k]))
            .collect();
        Local { np, u, f1, f2 }
    }

    /// `w_ij (Ã¹ D_ξU + Ã² D_ηU)_ij`, the advective volume term.
    fn advective_volume(&self, element: usize, l: &Local) -> Vec<State> {
        let np = l.np;
        let m = &self.metrics[element];
        let medium = self.mesh.medium(element);
        let ops = &self.ops;
        let mut out = vec![State::zeros(); np * np];
        for j in 0..np {
            for i in 0..np {
                let k = j * np + i;
                let mut dxi = State::zeros();
                let mut deta = State::zeros();
                for n in 0..np {
                    dxi += l.u[j * np + n] * ops.d(i, n);
                    deta += l.u[n * np + i] * ops.d(j, n);
                }
                out[k] = (medium.contravariant_flux(m.ja1[k], &dxi)
                    + medium.contravariant_flux(m.ja2[k], &deta))
                    * self.weights_2d[k];
            }
        }
        out
    }

    /// `w_ij (D_ξ F̃¹ + D_η F̃²)_ij`, the conservative strong volume term.
    fn conservative_strong_volume(&self, l: &Local) -> Vec<State> {
        let np = l.np;
        let ops = &self.ops;
        let mut out = vec![State::zeros(); np * np];
        for j in 0..np {
            for i in 0..np {
                let k = j * np + i;
                let mut acc = State::zeros();
                for n in 0..np {
                    acc += l.f1[j * np + n] * ops.d(i, n) + l.f2[n * np + i] * ops.d(j, n);
                }
                out[k] = acc * self.weights_2d[k];
            }
        }
        out
    }

    /// `⟨F̃, ∇ξ(ℓ_iℓ_j)⟩_N = Σ_m w_m w_j D_mi F̃¹_mj + Σ_n w_i w_n D_nj F̃²_in`.
    fn conservative_weak_volume(&self, l: &Local) -> Vec<State> {
        let np = l.np;
        let ops = &self.ops;
        let w = ops.weights();
        let mut out = vec![State::zeros(); np * np];
        for j in 0..np {
            for i in 0..np {
                let mut acc = State::zeros();
                for n in 0..np {
                    acc += l.f1[j * np + n] * (w[n] * w[j] * ops.d(n, i))
                        + l.f2[n * np + i] * (w[i] * w[n] * ops.d(n, j));
                }
                out[j * np + i] = acc;
            }
        }
        out
    }

    /// `Ã¹_ij Σ_m w_m w_j D_mi U_mj + Ã²_ij Σ_n w_i w_n D_nj U_in`, the
    /// advective term after summation by parts.
    fn advective_weak_volume(&self, element: usize, l: &Local) -> Vec<State> {
        let np = l.np;
        let ops = &self.ops;
        let w = ops.weights();
        let m = &self.metrics[element];
        let medium = self.mesh.medium(element);
        let mut out = vec![State::zeros(); np * np];
        for j in 0..np {
            for i in 0..np {
                let k = j * np + i;
                let mut sxi = State::zeros();
                let mut seta = State::zeros();
                for n in 0..np {
                    sxi += l.u[j * np + n] * (w[n] * w[j] * ops.d(n, i));
                    seta += l.u[n * np + i] * (w[i] * w[n] * ops.d(n, j));
                }
                out[k] = medium.contravariant_flux(m.ja1[k], &sxi)
                    + medium.contravariant_flux(m.ja2[k], &seta);
            }
        }
        out
    }

    /// Element residual of the selected reference form.
    pub fn form_residual<B: BoundaryProvider + ?Sized>(
        &self,
        form: Form,
        element: usize,
        field: &GlobalField,
        t: f64,
        bc: &B,
    ) -> Result<Vec<State>> {
        if form == Form::TwoPoint {
            return Ok(self.element_residual(element, field, t, bc)?.0);
        }
        let l = self.local_data(element, field);
        let medium = self.mesh.medium(element);
        let (mut r, surface_scale) = match form {
            Form::Strong => {
                let a = self.advective_volume(element, &l);
                let c = self.conservative_strong_volume(&l);
                (
                    a.iter()
                        .zip(&c)
                        .map(|(a, c)| (a + c) * 0.5)
                        .collect::<Vec<_>>(),
                    1.0,
                )
            }
            Form::Weak => {
                let a = self.advective_weak_volume(element, &l);
                let c = self.conservative_weak_volume(&l);
                (a.iter().zip(&c).map(|(a, c)| -(a + c) * 0.5).collect(), 0.0)
            }
            Form::DirectlyStable => {
                let a = self.advective_volume(element, &l);
                let c = self.conservative_weak_volume(&l);
                (a.iter().zip(&c).map(|(a, c)| (a - c) * 0.5).collect(), 0.5)
            }
            Form::TwoPoint => unreachable!(),
        };
        for (node, w, n_out, fstar) in self.surface_fluxes(element, field, t, bc)? {
            let own = medium.contravariant_flux(n_out, &l.u[node]);
            r[node] += (fstar - own * surface_scale) * w;
        }
        Ok(r)
    }

    /// Stiffness-summed time derivative computed from a reference form.
    pub fn form_time_derivative<B: BoundaryProvider + ?Sized>(
        &self,
        form: Form,
        field: &GlobalField,
        t: f64,
        bc: &B,
    ) -> Result<GlobalField> {
        let residuals = (0..self.mesh.elements().len())
            .map(|e| self.form_residual(form, e, field, t, bc))
            .collect::<Result<Vec<_>>>()?;
        let mut out = GlobalField::zeros(self.ndof());
        self.assemble_time_derivative(&residuals, &mut out);
        Ok(out)
    }
}
