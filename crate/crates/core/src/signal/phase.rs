use std::fmt;

use crate::sim::{Approach, Movement, Turn};

use super::SignalError;

/// One of the eight signal phases; doubles as the agent's action space.
///
/// The first four are dual-approach phases covering all twelve movements;
/// the last four grant a single approach all of its movements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseId {
    NorthSouthThrough,
    NorthSouthLeft,
    EastWestThrough,
    EastWestLeft,
    NorthAll,
    SouthAll,
    EastAll,
    WestAll,
}

impl PhaseId {
    pub const COUNT: usize = 8;

    pub const ALL: [PhaseId; 8] = [
        PhaseId::NorthSouthThrough,
        PhaseId::NorthSouthLeft,
        PhaseId::EastWestThrough,
        PhaseId::EastWestLeft,
        PhaseId::NorthAll,
        PhaseId::SouthAll,
        PhaseId::EastAll,
        PhaseId::WestAll,
    ];

    /// Cycle used by the baseline controllers: the four dual phases cover
    /// every movement.
    pub const BASELINE_CYCLE: [PhaseId; 4] = [
        PhaseId::NorthSouthThrough,
        PhaseId::NorthSouthLeft,
        PhaseId::EastWestThrough,
        PhaseId::EastWestLeft,
    ];

    pub fn index(self) -> usize {
        PhaseId::ALL
            .iter()
            .position(|p| *p == self)
            .expect("listed")
    }

    pub fn from_index(index: usize) -> Option<PhaseId> {
        PhaseId::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            PhaseId::NorthSouthThrough => "ns_through",
            PhaseId::NorthSouthLeft => "ns_left",
            PhaseId::EastWestThrough => "ew_through",
            PhaseId::EastWestLeft => "ew_left",
            PhaseId::NorthAll => "north_all",
            PhaseId::SouthAll => "south_all",
            PhaseId::EastAll => "east_all",
            PhaseId::WestAll => "west_all",
        }
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Whether two movements' paths cross or merge under standard four-leg
/// geometry with right-hand traffic. Same-approach movements never conflict;
/// opposing throughs and opposing lefts are compatible; a left conflicts
/// with every other approach's through; a right conflicts only with the
/// crossing through and the opposing left it merges across.
pub fn conflicts(a: Movement, b: Movement) -> bool {
    if a.approach == b.approach {
        return false;
    }
    // 0 here is impossible; 2 is the opposing approach, 1 and 3 are the
    // perpendicular ones.
    let d = (b.approach.index() + 4 - a.approach.index()) % 4;
    match (a.turn, b.turn) {
        (Turn::Through, Turn::Through) | (Turn::Left, Turn::Left) => d % 2 == 1,
        (Turn::Left, Turn::Through) | (Turn::Through, Turn::Left) => true,
        (Turn::Left, Turn::Right) | (Turn::Right, Turn::Left) => d == 2,
        (Turn::Right, Turn::Through) => d == 1,
        (Turn::Through, Turn::Right) => d == 3,
        (Turn::Right, Turn::Right) => false,
    }
}

const fn mv(approach: Approach, turn: Turn) -> Movement {
    Movement { approach, turn }
}

const NS_THROUGH: [Movement; 4] = [
    mv(Approach::North, Turn::Through),
    mv(Approach::North, Turn::Right),
    mv(Approach::South, Turn::Through),
    mv(Approach::South, Turn::Right),
];
const NS_LEFT: [Movement; 2] = [
    mv(Approach::North, Turn::Left),
    mv(Approach::South, Turn::Left),
];
const EW_THROUGH: [Movement; 4] = [
    mv(Approach::East, Turn::Through),
    mv(Approach::East, Turn::Right),
    mv(Approach::West, Turn::Through),
    mv(Approach::West, Turn::Right),
];
const EW_LEFT: [Movement; 2] = [
    mv(Approach::East, Turn::Left),
    mv(Approach::West, Turn::Left),
];
const NORTH_ALL: [Movement; 3] = [
    mv(Approach::North, Turn::Left),
    mv(Approach::North, Turn::Through),
    mv(Approach::North, Turn::Right),
];
const SOUTH_ALL: [Movement; 3] = [
    mv(Approach::South, Turn::Left),
    mv(Approach::South, Turn::Through),
    mv(Approach::South, Turn::Right),
];
const EAST_ALL: [Movement; 3] = [
    mv(Approach::East, Turn::Left),
    mv(Approach::East, Turn::Through),
    mv(Approach::East, Turn::Right),
];
const WEST_ALL: [Movement; 3] = [
    mv(Approach::West, Turn::Left),
    mv(Approach::West, Turn::Through),
    mv(Approach::West, Turn::Right),
];

/// Mapping from each phase to the movements it grants green. The assignment
/// is a declared convention kept in this one table so it can be swapped.
#[derive(Debug, Clone, Copy)]
pub struct PhaseTable {
    sets: [&'static [Movement]; 8],
}

impl PhaseTable {
    pub fn standard() -> Self {
        PhaseTable {
            sets: [
                &NS_THROUGH,
                &NS_LEFT,
                &EW_THROUGH,
                &EW_LEFT,
                &NORTH_ALL,
                &SOUTH_ALL,
                &EAST_ALL,
                &WEST_ALL,
            ],
        }
    }

    pub fn movements(&self, phase: PhaseId) -> &'static [Movement] {
        self.sets[phase.index()]
    }

    pub fn grants(&self, phase: PhaseId, movement: Movement) -> bool {
        self.movements(phase).contains(&movement)
    }

    /// Every phase must grant only pairwise non-conflicting movements, and
    /// the four dual phases together must cover all twelve movements.
    pub fn validate(&self) -> Result<(), SignalError> {
        for phase in PhaseId::ALL {
            let set = self.movements(phase);
            for (i, a) in set.iter().enumerate() {
                for b in &set[i + 1..] {
                    if conflicts(*a, *b) {
                        return Err(SignalError::ConflictingPhase {
                            phase,
                            a: *a,
                            b: *b,
                        });
                    }
                }
            }
        }
        let mut covered = [false; Movement::COUNT];
        for phase in PhaseId::BASELINE_CYCLE {
            for m in self.movements(phase) {
                covered[m.index()] = true;
            }
        }
        if covered.iter().all(|c| *c) {
            Ok(())
        } else {
            Err(SignalError::IncompleteCoverage)
        }
    }
}

impl Default for PhaseTable {
    fn default() -> Self {
        PhaseTable::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const fn m(a: Approach, t: Turn) -> Movement {
        mv(a, t)
    }

    #[test]
    fn opposing_throughs_are_compatible() {
        assert!(!conflicts(
            m(Approach::North, Turn::Through),
            m(Approach::South, Turn::Through)
        ));
    }

    #[test]
    fn crossing_throughs_conflict() {
        assert!(conflicts(
            m(Approach::North, Turn::Through),
            m(Approach::East, Turn::Through)
        ));
    }

    #[test]
    fn left_conflicts_with_opposing_through() {
        assert!(conflicts(
            m(Approach::North, Turn::Through),
            m(Approach::South, Turn::Left)
        ));
    }

    #[test]
    fn opposing_lefts_are_compatible() {
        assert!(!conflicts(
            m(Approach::North, Turn::Left),
            m(Approach::South, Turn::Left)
        ));
    }

    #[test]
    fn right_turn_conflicts() {
        // The right from the north merges across the east approach's through
        // and the south approach's left; nothing else.
        let right = m(Approach::North, Turn::Right);
        assert!(conflicts(right, m(Approach::East, Turn::Through)));
        assert!(conflicts(right, m(Approach::South, Turn::Left)));
        assert!(!conflicts(right, m(Approach::South, Turn::Through)));
        assert!(!conflicts(right, m(Approach::West, Turn::Through)));
        assert!(!conflicts(right, m(Approach::East, Turn::Right)));
        assert!(!conflicts(right, m(Approach::West, Turn::Left)));
    }

    #[test]
    fn conflict_matrix_is_symmetric_and_irreflexive() {
        for a in Movement::ALL {
            assert!(!conflicts(a, a));
            for b in Movement::ALL {
                assert_eq!(conflicts(a, b), conflicts(b, a));
            }
        }
    }

    #[test]
    fn same_approach_never_conflicts() {
        for a in Movement::ALL {
            for b in Movement::ALL {
                if a.approach == b.approach {
                    assert!(!conflicts(a, b));
                }
            }
        }
    }

    #[test]
    fn standard_table_is_valid() {
        PhaseTable::standard().validate().unwrap();
    }

    #[test]
    fn phase_grants() {
        let table = PhaseTable::standard();
        assert!(table.grants(
            PhaseId::NorthSouthThrough,
            m(Approach::North, Turn::Through)
        ));
        assert!(!table.grants(PhaseId::NorthSouthLeft, m(Approach::North, Turn::Through)));
        assert!(table.grants(PhaseId::WestAll, m(Approach::West, Turn::Left)));
    }

    #[test]
    fn phase_indexing_round_trips() {
        for (i, p) in PhaseId::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
            assert_eq!(PhaseId::from_index(i), Some(*p));
        }
        assert_eq!(PhaseId::from_index(8), None);
    }
}
