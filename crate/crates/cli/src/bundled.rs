//! Scenarios shipped with the binary.

pub const BUNDLED: [(&str, &str); 7] = [
    ("periodic_shift", include_str!("../scenarios/periodic_shift.json")),
    ("morse_4pi", include_str!("../scenarios/morse_4pi.json")),
    ("dirac_calderon", include_str!("../scenarios/dirac_calderon.json")),
    ("sectorial_jordan", include_str!("../scenarios/sectorial_jordan.json")),
    ("cobordism_bounding", include_str!("../scenarios/cobordism_bounding.json")),
    ("continuity_dirac", include_str!("../scenarios/continuity_dirac.json")),
    ("sf_mas_random", include_str!("../scenarios/sf_mas_random.json")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    #[test]
    fn bundled_scenarios_parse_and_are_named_after_their_key() {
        for (name, text) in BUNDLED {
            let s = Scenario::parse(text, name).unwrap();
            assert_eq!(s.name, name);
        }
    }
}
