//! Design inputs describing one bumper application.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! symbol_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const VALUES: &'static [&'static str] = &[$($text),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }
    };
}

symbol_enum!(VehicleType {
    Sedan => "sedan",
    Subcompact => "subcompact",
    Sport => "sport",
    PickupTruck => "pickup_truck",
});

symbol_enum!(DesiredFinish {
    Bright => "bright",
    NeutralColor => "neutral_color",
    MatchBodyColor => "match_body_color",
    Unknown => "unknown",
});

symbol_enum!(BumperShape {
    Flat => "flat",
    Peaked => "peaked",
    Curved => "curved",
});

symbol_enum!(
    /// Largest offset between bumper face and body the design may use.
    AllowedOffset {
        Large => "large",
        Medium => "medium",
        Small => "small",
    }
);

symbol_enum!(CostRange {
    High => "high",
    Medium => "medium",
    Low => "low",
});

symbol_enum!(ImpactRating {
    Over5Mph => "over_5mph",
    Mph5 => "mph_5",
    Mph2_5 => "mph_2_5",
    NoStandard => "no_standard",
});

/// The complete set of design inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactSet {
    pub vehicle_type: VehicleType,
    pub desired_finish: DesiredFinish,
    pub bumper_shape: BumperShape,
    pub cutouts_present: bool,
    pub highest_allowed_offset: AllowedOffset,
    pub cost_range: CostRange,
    pub impact_rating: ImpactRating,
    pub curb_weight_lbs: f64,
    pub production_volume_thousands: f64,
    pub run_years: f64,
    pub lead_time_years: f64,
}

/// Names of the [`FactSet`] fields that rule conditions may test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactField {
    VehicleType,
    DesiredFinish,
    BumperShape,
    CutoutsPresent,
    HighestAllowedOffset,
    CostRange,
    ImpactRating,
    CurbWeightLbs,
    ProductionVolumeThousands,
    RunYears,
    LeadTimeYears,
}

/// What kind of value a fact field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Symbol(&'static [&'static str]),
    Flag,
    Number,
}

/// The value of one fact field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactValue {
    Symbol(&'static str),
    Flag(bool),
    Number(f64),
}

impl FactField {
    pub const ALL: [FactField; 11] = [
        FactField::VehicleType,
        FactField::DesiredFinish,
        FactField::BumperShape,
        FactField::CutoutsPresent,
        FactField::HighestAllowedOffset,
        FactField::CostRange,
        FactField::ImpactRating,
        FactField::CurbWeightLbs,
        FactField::ProductionVolumeThousands,
        FactField::RunYears,
        FactField::LeadTimeYears,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FactField::VehicleType => "vehicle_type",
            FactField::DesiredFinish => "desired_finish",
            FactField::BumperShape => "bumper_shape",
            FactField::CutoutsPresent => "cutouts_present",
            FactField::HighestAllowedOffset => "highest_allowed_offset",
            FactField::CostRange => "cost_range",
            FactField::ImpactRating => "impact_rating",
            FactField::CurbWeightLbs => "curb_weight_lbs",
            FactField::ProductionVolumeThousands => "production_volume_thousands",
            FactField::RunYears => "run_years",
            FactField::LeadTimeYears => "lead_time_years",
        }
    }

    pub fn kind(&self) -> FieldKind {
        match self {
            FactField::VehicleType => FieldKind::Symbol(VehicleType::VALUES),
            FactField::DesiredFinish => FieldKind::Symbol(DesiredFinish::VALUES),
            FactField::BumperShape => FieldKind::Symbol(BumperShape::VALUES),
            FactField::CutoutsPresent => FieldKind::Flag,
            FactField::HighestAllowedOffset => FieldKind::Symbol(AllowedOffset::VALUES),
            FactField::CostRange => FieldKind::Symbol(CostRange::VALUES),
            FactField::ImpactRating => FieldKind::Symbol(ImpactRating::VALUES),
            FactField::CurbWeightLbs
            | FactField::ProductionVolumeThousands
            | FactField::RunYears
            | FactField::LeadTimeYears => FieldKind::Number,
        }
    }
}

impl FactSet {
    /// Parses and validates a facts document.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let facts: FactSet = serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            Error::InvalidFacts {
                field,
                message: err.into_inner().to_string(),
            }
        })?;
        facts.validate()?;
        Ok(facts)
    }

    pub fn validate(&self) -> Result<()> {
        for field in FactField::ALL {
            if let FactValue::Number(x) = self.get(field) {
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::InvalidFacts {
                        field: field.as_str().into(),
                        message: format!("must be a positive number, got {x}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, field: FactField) -> FactValue {
        match field {
            FactField::VehicleType => FactValue::Symbol(self.vehicle_type.as_str()),
            FactField::DesiredFinish => FactValue::Symbol(self.desired_finish.as_str()),
            FactField::BumperShape => FactValue::Symbol(self.bumper_shape.as_str()),
            FactField::CutoutsPresent => FactValue::Flag(self.cutouts_present),
            FactField::HighestAllowedOffset => {
                FactValue::Symbol(self.highest_allowed_offset.as_str())
            }
            FactField::CostRange => FactValue::Symbol(self.cost_range.as_str()),
            FactField::ImpactRating => FactValue::Symbol(self.impact_rating.as_str()),
            FactField::CurbWeightLbs => FactValue::Number(self.curb_weight_lbs),
            FactField::ProductionVolumeThousands => {
                FactValue::Number(self.production_volume_thousands)
            }
            FactField::RunYears => FactValue::Number(self.run_years),
            FactField::LeadTimeYears => FactValue::Number(self.lead_time_years),
        }
    }
}
