//! The message-passing (Δ+1)-coloring with a `final` flag.
//!
//! Every round a node broadcasts `(c, final)`. A final color is withdrawn
//! only when a neighbor announces the same color as final, and a tentative
//! color becomes final once no neighbor announces it at all.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{NodeView, Protocol, ProtocolError, ProtocolKind, RadiusClaim};
use crate::faults::{ColorValue, FaultError, StatePatch};
use crate::graph::{Graph, NodeId};

pub type Color = u32;

/// `color == None` is ⊥ (no choice made).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColorState {
    pub color: Option<Color>,
    #[serde(rename = "final")]
    pub is_final: bool,
}

impl ColorState {
    pub fn settled(color: Color) -> Self {
        Self { color: Some(color), is_final: true }
    }

    pub fn tentative(color: Option<Color>) -> Self {
        Self { color, is_final: false }
    }
}

/// ⊥ with probability 1/2, otherwise a uniform color from `{0..=degree} \ tabu`.
///
/// The candidate set is checked before the coin is flipped, so an exhausted
/// palette is reported regardless of the draw.
pub fn random_color<R: RngCore + ?Sized>(
    degree: usize,
    tabu: &[Color],
    rng: &mut R,
) -> Result<Option<Color>, ProtocolError> {
    let free = (0..=degree as Color).filter(|c| !tabu.contains(c)).count();
    if free == 0 {
        return Err(ProtocolError::PaletteExhausted { degree });
    }
    if rng.random_bool(0.5) {
        return Ok(None);
    }
    let pick = rng.random_range(0..free);
    Ok((0..=degree as Color).filter(|c| !tabu.contains(c)).nth(pick))
}

/// One round of the coloring at a node of the given degree.
pub fn acol_transition<R: RngCore + ?Sized>(
    state: &ColorState,
    inbox: &[ColorState],
    degree: usize,
    rng: &mut R,
) -> Result<ColorState, ProtocolError> {
    let mut occupied: Vec<Color> = Vec::with_capacity(inbox.len());
    let mut tabu: Vec<Color> = Vec::with_capacity(inbox.len());
    for msg in inbox {
        if let Some(c) = msg.color {
            occupied.push(c);
            if msg.is_final {
                tabu.push(c);
            }
        }
    }

    let mut next = *state;
    match state.color {
        None => next.is_final = false,
        Some(c) if c as usize > degree => next.is_final = false,
        Some(c) => {
            if state.is_final {
                if tabu.contains(&c) {
                    next.is_final = false;
                }
            } else if !occupied.contains(&c) {
                next.is_final = true;
            }
        }
    }
    if !next.is_final {
        next.color = random_color(degree, &tabu, rng)?;
    }
    Ok(next)
}

/// Every node holds a color, each color is at most the node's degree, and
/// adjacent colors differ.
pub fn is_legal_coloring(g: &Graph, states: &[ColorState]) -> bool {
    (0..g.n()).all(|v| match states[v].color {
        None => false,
        Some(c) => {
            c as usize <= g.degree(v) && g.neighbors(v).iter().all(|&w| states[w].color != Some(c))
        }
    })
}

pub fn is_legitimate_acol(g: &Graph, states: &[ColorState]) -> bool {
    states.iter().all(|s| s.is_final) && is_legal_coloring(g, states)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Acol;

impl Protocol for Acol {
    type State = ColorState;
    type Message = ColorState;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Acol
    }

    fn message(&self, state: &ColorState) -> ColorState {
        *state
    }

    fn transition(
        &self,
        node: &NodeView,
        state: &ColorState,
        inbox: &[ColorState],
        rng: &mut dyn RngCore,
    ) -> Result<ColorState, ProtocolError> {
        acol_transition(state, inbox, node.degree, rng)
    }

    fn is_legal(&self, g: &Graph, states: &[ColorState]) -> bool {
        is_legal_coloring(g, states)
    }

    fn is_legitimate(&self, g: &Graph, states: &[ColorState]) -> bool {
        is_legitimate_acol(g, states)
    }

    fn radius_claim(&self) -> RadiusClaim {
        RadiusClaim::Hops(1)
    }

    fn random_state(&self, g: &Graph, _v: NodeId, rng: &mut dyn RngCore) -> ColorState {
        // Uniform over {⊥, 0..=Δ}.
        let pick = rng.random_range(0..=g.max_degree() as u32 + 1);
        ColorState { color: pick.checked_sub(1), is_final: rng.random_bool(0.5) }
    }

    fn patch_state(&self, _g: &Graph, v: NodeId, state: &ColorState, patch: &StatePatch) -> Result<ColorState, FaultError> {
        patch_color_state(v, state, patch)
    }

    fn patch_message(&self, _g: &Graph, v: NodeId, message: &ColorState, patch: &StatePatch) -> Result<ColorState, FaultError> {
        patch_color_state(v, message, patch)
    }
}

fn patch_color_state(v: NodeId, state: &ColorState, patch: &StatePatch) -> Result<ColorState, FaultError> {
    if patch.membership.is_some() {
        return Err(FaultError::PatchField { protocol: ProtocolKind::Acol, field: "membership", node: v });
    }
    let mut next = *state;
    if let Some(color) = patch.color {
        next.color = match color {
            ColorValue::Bottom => None,
            ColorValue::Color(c) => Some(c),
        };
    }
    if let Some(flag) = patch.is_final {
        next.is_final = flag;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_free_color_or_bottom() {
        let mut r = rng(1);
        for _ in 0..1000 {
            let c = random_color(3, &[0, 1, 2], &mut r).unwrap();
            assert!(c.is_none() || c == Some(3));
        }
    }

    #[test]
    fn degree_zero_draws_bottom_or_zero() {
        let mut r = rng(2);
        let draws: Vec<_> = (0..20_000).map(|_| random_color(0, &[], &mut r).unwrap()).collect();
        assert!(draws.iter().all(|c| c.is_none() || *c == Some(0)));
        let bottoms = draws.iter().filter(|c| c.is_none()).count() as f64 / draws.len() as f64;
        assert!((bottoms - 0.5).abs() < 0.015, "{bottoms}");
    }

    #[test]
    fn exhausted_palette_is_a_contract_error() {
        assert_eq!(random_color(2, &[0, 1, 2], &mut rng(0)), Err(ProtocolError::PaletteExhausted { degree: 2 }));
    }

    #[test]
    fn draw_frequencies_are_fair() {
        let mut r = rng(3);
        let draws = 100_000;
        let mut counts = [0u64; 6];
        let mut bottoms = 0u64;
        for _ in 0..draws {
            match random_color(5, &[], &mut r).unwrap() {
                None => bottoms += 1,
                Some(c) => counts[c as usize] += 1,
            }
        }
        let freq = bottoms as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.01, "bottom frequency {freq}");
        let colored = (draws - bottoms) as f64;
        let expected = colored / 6.0;
        let chi2: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        // 5 degrees of freedom, p = 0.001.
        assert!(chi2 < 20.515, "chi2 {chi2}");
    }

    #[test]
    fn settled_node_without_conflict_pauses() {
        let inbox = [ColorState::settled(0), ColorState::tentative(Some(1)), ColorState::tentative(None)];
        let next = acol_transition(&ColorState::settled(2), &inbox, 3, &mut rng(4)).unwrap();
        assert_eq!(next, ColorState::settled(2));
    }

    #[test]
    fn out_of_range_color_is_redrawn() {
        for seed in 0..50 {
            let next = acol_transition(&ColorState::settled(7), &[ColorState::settled(0)], 3, &mut rng(seed)).unwrap();
            assert!(!next.is_final);
            assert!(next.color.is_none_or(|c| (1..=3).contains(&c)));
        }
    }

    #[test]
    fn final_conflict_withdraws_and_avoids_tabu() {
        let inbox = [ColorState::settled(2), ColorState::settled(0)];
        for seed in 0..50 {
            let next = acol_transition(&ColorState::settled(2), &inbox, 2, &mut rng(seed)).unwrap();
            assert!(!next.is_final);
            assert!(next.color.is_none() || next.color == Some(1));
        }
    }

    #[test]
    fn tentative_color_finalizes_when_unoccupied() {
        let inbox = [ColorState::tentative(Some(0))];
        let next = acol_transition(&ColorState::tentative(Some(1)), &inbox, 1, &mut rng(5)).unwrap();
        assert_eq!(next, ColorState::settled(1));
        // Occupied by a tentative neighbor: redraw, but tabu is empty.
        let next = acol_transition(&ColorState::tentative(Some(0)), &inbox, 1, &mut rng(5)).unwrap();
        assert!(!next.is_final);
    }

    #[test]
    fn legality_predicates() {
        let g = generate(&GraphSpec::Star { d: 3 }).unwrap();
        let mut states = vec![ColorState::settled(1), ColorState::settled(0), ColorState::settled(0), ColorState::settled(0)];
        assert!(is_legitimate_acol(&g, &states));
        states[2].is_final = false;
        assert!(is_legal_coloring(&g, &states));
        assert!(!is_legitimate_acol(&g, &states));

        let path = generate(&GraphSpec::Path { n: 3 }).unwrap();
        let states = [ColorState::settled(0), ColorState::settled(1), ColorState { color: None, is_final: true }];
        assert!(!is_legal_coloring(&path, &states));
        // A leaf colored above its degree is not legal either.
        let states = [ColorState::settled(0), ColorState::settled(1), ColorState::settled(2)];
        assert!(!is_legal_coloring(&path, &states));
    }
}
