//! Requester identities and the sensitive groups fairness is measured over.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::FairserveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Race {
    White,
    Black,
    AmericanIndian,
    Asian,
    NativeHawaiian,
    OtherRace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgeBand {
    Child,
    Teenager,
    Adult,
    MiddleAged,
    Elder,
}

/// Fitzpatrick skin type, six values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkinType {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

pub const RACE_VALUES: [Race; 6] = [
    Race::White,
    Race::Black,
    Race::AmericanIndian,
    Race::Asian,
    Race::NativeHawaiian,
    Race::OtherRace,
];
pub const GENDER_VALUES: [Gender; 3] = [Gender::Female, Gender::Male, Gender::Other];
pub const AGE_VALUES: [AgeBand; 5] = [
    AgeBand::Child,
    AgeBand::Teenager,
    AgeBand::Adult,
    AgeBand::MiddleAged,
    AgeBand::Elder,
];
pub const DISABILITY_VALUES: [bool; 2] = [false, true];
pub const SKIN_VALUES: [SkinType; 6] = [
    SkinType::I,
    SkinType::II,
    SkinType::III,
    SkinType::IV,
    SkinType::V,
    SkinType::VI,
];

/// One-hot feature width: 6 + 3 + 5 + 2 + 6.
pub const ENCODING_DIM: usize = 22;

/// The five sensitive attributes of one requester.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdentityProfile {
    pub race: Race,
    pub gender: Gender,
    pub age_band: AgeBand,
    pub disabled: bool,
    pub skin_type: SkinType,
}

impl IdentityProfile {
    /// Index of each attribute value within its enumeration, in declaration order.
    pub fn attribute_indices(&self) -> [usize; 5] {
        [
            RACE_VALUES.iter().position(|v| *v == self.race).unwrap(),
            GENDER_VALUES.iter().position(|v| *v == self.gender).unwrap(),
            AGE_VALUES.iter().position(|v| *v == self.age_band).unwrap(),
            DISABILITY_VALUES.iter().position(|v| *v == self.disabled).unwrap(),
            SKIN_VALUES.iter().position(|v| *v == self.skin_type).unwrap(),
        ]
    }

    /// One-hot encoding per attribute: 22 entries, exactly 5 ones.
    pub fn encode(&self) -> [f64; ENCODING_DIM] {
        let mut out = [0.0; ENCODING_DIM];
        let idx = self.attribute_indices();
        let mut offset = 0;
        for (i, size) in ATTRIBUTE_SIZES.iter().enumerate() {
            out[offset + idx[i]] = 1.0;
            offset += size;
        }
        out
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(v: &[f64; ENCODING_DIM]) -> Result<IdentityProfile, FairserveError> {
        let mut idx = [0usize; 5];
        let mut offset = 0;
        for (i, size) in ATTRIBUTE_SIZES.iter().enumerate() {
            let block = &v[offset..offset + size];
            let ones: Vec<usize> = block
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(j, _)| j)
                .collect();
            if ones.len() != 1 || block[ones[0]] != 1.0 {
                return Err(FairserveError::InvalidEncoding);
            }
            idx[i] = ones[0];
            offset += size;
        }
        Ok(IdentityProfile {
            race: RACE_VALUES[idx[0]],
            gender: GENDER_VALUES[idx[1]],
            age_band: AGE_VALUES[idx[2]],
            disabled: DISABILITY_VALUES[idx[3]],
            skin_type: SKIN_VALUES[idx[4]],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensitiveAttribute {
    Race,
    Gender,
    Age,
    Disability,
    Skin,
}

pub const ATTRIBUTE_SIZES: [usize; 5] = [6, 3, 5, 2, 6];
pub const ATTRIBUTES: [SensitiveAttribute; 5] = [
    SensitiveAttribute::Race,
    SensitiveAttribute::Gender,
    SensitiveAttribute::Age,
    SensitiveAttribute::Disability,
    SensitiveAttribute::Skin,
];

/// One attribute value; people holding it form the group, everyone else the complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensitiveGroup {
    pub attribute: SensitiveAttribute,
    pub value_index: usize,
}

impl SensitiveGroup {
    pub fn label(&self) -> String {
        match self.attribute {
            SensitiveAttribute::Race => format!("race:{:?}", RACE_VALUES[self.value_index]),
            SensitiveAttribute::Gender => format!("gender:{:?}", GENDER_VALUES[self.value_index]),
            SensitiveAttribute::Age => format!("age:{:?}", AGE_VALUES[self.value_index]),
            SensitiveAttribute::Disability => {
                format!("disability:{}", DISABILITY_VALUES[self.value_index])
            }
            SensitiveAttribute::Skin => format!("skin:{:?}", SKIN_VALUES[self.value_index]),
        }
    }
}

/// All 22 single-value groups in stable order (race, gender, age, disability, skin).
pub fn enumerate_groups() -> Vec<SensitiveGroup> {
    let mut groups = Vec::with_capacity(ENCODING_DIM);
    for (a, attribute) in ATTRIBUTES.iter().enumerate() {
        for value_index in 0..ATTRIBUTE_SIZES[a] {
            groups.push(SensitiveGroup {
                attribute: *attribute,
                value_index,
            });
        }
    }
    groups
}

pub fn in_group(p: &IdentityProfile, g: &SensitiveGroup) -> bool {
    let idx = p.attribute_indices();
    let a = ATTRIBUTES.iter().position(|x| *x == g.attribute).unwrap();
    idx[a] == g.value_index
}

/// Per-attribute sampling weights; uniform when absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationWeights {
    pub race: Option<[f64; 6]>,
    pub gender: Option<[f64; 3]>,
    pub age: Option<[f64; 5]>,
    pub disability: Option<[f64; 2]>,
    pub skin: Option<[f64; 6]>,
}

fn weighted_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let x = rng.gen_range(0.0..total);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn sample_attr<R: Rng>(rng: &mut R, size: usize, weights: Option<&[f64]>) -> usize {
    match weights {
        Some(w) => weighted_index(rng, w),
        None => rng.gen_range(0..size),
    }
}

/// Draws one identity, each attribute independent.
pub fn sample_identity<R: Rng>(rng: &mut R, weights: &PopulationWeights) -> IdentityProfile {
    IdentityProfile {
        race: RACE_VALUES[sample_attr(rng, 6, weights.race.as_ref().map(|w| w.as_slice()))],
        gender: GENDER_VALUES[sample_attr(rng, 3, weights.gender.as_ref().map(|w| w.as_slice()))],
        age_band: AGE_VALUES[sample_attr(rng, 5, weights.age.as_ref().map(|w| w.as_slice()))],
        disabled: DISABILITY_VALUES[sample_attr(rng, 2, weights.disability.as_ref().map(|w| w.as_slice()))],
        skin_type: SKIN_VALUES[sample_attr(rng, 6, weights.skin.as_ref().map(|w| w.as_slice()))],
    }
}
