//! Published reference values: the length-8 example sequence, pairwise rank
//! probabilities, and permutation sets with their certified coherence.

use crate::gf2::Permutation;

/// `π = (2,1,3)` example: permutation, linear mask `c`, `Q_π` column, `f` column.
pub const EXAMPLE_PERMUTATION: [usize; 3] = [2, 1, 3];
pub const EXAMPLE_C: usize = 6;
pub const EXAMPLE_QUADRATIC: [u8; 8] = [0, 0, 0, 1, 0, 1, 0, 0];
pub const EXAMPLE_SEQUENCE: [u8; 8] = [0, 0, 1, 0, 1, 0, 0, 0];

/// Reference rank probabilities `(m, r, p_r)` from 10^7 random pairs.
pub const RANK_PROBABILITIES: &[(usize, usize, f64)] = &[
    (5, 2, 2.543926e-1),
    (5, 4, 7.456074e-1),
    (6, 2, 5.856820e-2),
    (6, 4, 5.848499e-1),
    (6, 6, 3.565819e-1),
    (7, 2, 1.310750e-2),
    (7, 4, 2.214437e-1),
    (7, 6, 7.654488e-1),
    (8, 2, 2.218900e-3),
    (8, 4, 5.931190e-2),
    (8, 6, 5.814335e-1),
    (8, 8, 3.570357e-1),
    (9, 2, 3.352000e-4),
    (9, 4, 1.153890e-2),
    (9, 6, 2.285468e-1),
    (9, 8, 7.595791e-1),
    (10, 2, 4.190000e-5),
    (10, 4, 1.914300e-3),
    (10, 6, 5.557250e-2),
    (10, 8, 5.863399e-1),
    (10, 10, 3.561314e-1),
];

/// `p_r` for one `m`, indexed by even rank.
pub fn rank_probabilities(m: usize) -> Vec<(usize, f64)> {
    RANK_PROBABILITIES
        .iter()
        .filter(|(mm, _, _)| *mm == m)
        .map(|&(_, r, p)| (r, p))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct PermutationSet {
    pub m: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub coherence: f64,
    pub permutations: &'static [&'static str],
}

impl PermutationSet {
    pub fn parse(&self) -> Vec<Permutation> {
        self.permutations
            .iter()
            .map(|s| s.parse().expect("reference permutations are valid"))
            .collect()
    }
}

pub const PERMUTATION_SETS: &[PermutationSet] = &[
    PermutationSet {
        m: 5,
        l_min: 2,
        l_max: 8,
        coherence: 0.25,
        permutations: &[
            "5,4,3,2,1",
            "3,4,2,5,1",
            "4,2,5,3,1",
            "4,3,5,1,2",
            "4,5,1,3,2",
            "5,3,1,4,2",
            "5,4,2,1,3",
            "4,1,2,5,3",
        ],
    },
    PermutationSet {
        m: 6,
        l_min: 2,
        l_max: 5,
        coherence: 0.125,
        permutations: &[
            "3,4,5,2,6,1",
            "6,3,2,4,1,5",
            "4,1,6,5,2,3",
            "6,5,3,1,2,4",
            "5,3,2,1,6,4",
        ],
    },
    PermutationSet {
        m: 6,
        l_min: 6,
        l_max: 8,
        coherence: 0.25,
        permutations: &[
            "3,4,5,2,6,1",
            "6,4,2,1,5,3",
            "6,1,4,3,2,5",
            "4,1,5,6,2,3",
            "4,2,1,5,6,3",
            "6,5,3,1,4,2",
            "6,1,5,3,4,2",
            "6,2,3,1,5,4",
        ],
    },
    PermutationSet {
        m: 7,
        l_min: 2,
        l_max: 8,
        coherence: 0.125,
        permutations: &[
            "4,5,1,3,6,7,2",
            "4,2,5,1,6,7,3",
            "6,7,1,2,3,5,4",
            "5,3,6,4,1,7,2",
            "6,4,7,3,1,5,2",
            "4,3,6,7,5,2,1",
            "6,1,3,2,7,4,5",
            "6,7,5,1,4,3,2",
        ],
    },
    PermutationSet {
        m: 8,
        l_min: 2,
        l_max: 5,
        coherence: 0.0625,
        permutations: &[
            "4,5,6,1,3,7,8,2",
            "7,6,8,2,3,1,4,5",
            "7,1,8,6,4,3,5,2",
            "6,7,2,3,8,4,1,5",
            "8,3,1,5,2,7,4,6",
        ],
    },
    PermutationSet {
        m: 8,
        l_min: 6,
        l_max: 8,
        coherence: 0.125,
        permutations: &[
            "5,7,4,3,2,8,6,1",
            "5,7,8,4,6,2,1,3",
            "5,6,2,7,8,3,4,1",
            "5,3,1,6,8,7,2,4",
            "8,3,1,7,6,2,4,5",
            "6,1,3,7,2,8,4,5",
            "5,1,8,6,7,2,3,4",
            "8,1,4,6,7,5,2,3",
        ],
    },
    PermutationSet {
        m: 9,
        l_min: 2,
        l_max: 8,
        coherence: 0.0625,
        permutations: &[
            "8,3,7,4,9,2,5,1,6",
            "8,4,3,7,2,6,1,9,5",
            "9,5,4,1,6,8,3,7,2",
            "6,5,8,7,9,3,4,2,1",
            "4,1,7,6,8,9,2,5,3",
            "4,8,2,6,9,7,5,3,1",
            "5,3,7,8,2,1,6,9,4",
            "5,6,9,3,7,1,8,2,4",
        ],
    },
    PermutationSet {
        m: 10,
        l_min: 2,
        l_max: 5,
        coherence: 0.03125,
        permutations: &[
            "9,1,6,3,2,8,5,4,10,7",
            "5,1,9,8,2,10,6,3,7,4",
            "6,3,8,10,9,7,1,5,4,2",
            "7,6,8,1,3,2,10,9,4,5",
            "9,5,3,2,4,8,6,10,7,1",
        ],
    },
    PermutationSet {
        m: 10,
        l_min: 6,
        l_max: 8,
        coherence: 0.0625,
        permutations: &[
            "5,4,8,1,7,9,10,6,2,3",
            "8,9,3,4,10,1,6,2,5,7",
            "6,2,7,8,5,4,3,9,10,1",
            "9,10,8,3,4,1,7,2,6,5",
            "5,8,4,7,9,10,3,6,2,1",
            "6,4,8,2,7,10,5,9,1,3",
            "3,6,10,4,1,8,9,5,7,2",
            "8,5,7,2,10,1,6,9,3,4",
        ],
    },
];

/// Reference set covering `(m, L)`, if any.
pub fn permutation_set_for(m: usize, l: usize) -> Option<&'static PermutationSet> {
    PERMUTATION_SETS
        .iter()
        .find(|s| s.m == m && (s.l_min..=s.l_max).contains(&l))
}
