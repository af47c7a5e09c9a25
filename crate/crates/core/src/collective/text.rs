//! Line-oriented text form of a [`CollectiveKet`], one term per line:
//!
//! ```text
//! s-=1 s+=0 g+=0 g-=1 | S:W1:+ S:W2:- AS:A:+ | -0.2886751345948129 0
//! ```
//!
//! Fields are the four mode counts, the ordered photon records
//! (`channel:slot:polarization`) and the real and imaginary parts of the
//! amplitude. Terms appear in label order, so output is deterministic.

use num_complex::Complex64;

use super::{BasisLabel, Channel, CollectiveKet, PhotonRecord, Polarization, Slot, StateError};

fn record_text(p: &PhotonRecord) -> String {
    let channel = match p.channel() {
        Channel::Stokes => "S",
        Channel::AntiStokes => "AS",
    };
    format!("{}:{}:{}", channel, p.slot, p.polarization.symbol())
}

pub fn to_text(state: &CollectiveKet) -> String {
    let mut out = String::new();
    for (l, a) in state.terms() {
        let photons: Vec<String> = l.photons.iter().map(record_text).collect();
        out.push_str(&format!(
            "s-={} s+={} g+={} g-={} | {} | {} {}\n",
            l.n_s_minus,
            l.n_s_plus,
            l.n_g_plus,
            l.n_g_minus_ret,
            photons.join(" "),
            a.re,
            a.im
        ));
    }
    out
}

fn bad(line: &str) -> StateError {
    StateError::Parse(line.to_string())
}

fn parse_record(token: &str, line: &str) -> Result<PhotonRecord, StateError> {
    let mut parts = token.split(':');
    let (channel, slot, pol) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(s), Some(p), None) => (c, s, p),
        _ => return Err(bad(line)),
    };
    let slot = match slot {
        "W1" => Slot::W1,
        "W2" => Slot::W2,
        "A" => Slot::A,
        "B" => Slot::B,
        _ => return Err(bad(line)),
    };
    let expected = match slot.channel() {
        Channel::Stokes => "S",
        Channel::AntiStokes => "AS",
    };
    if channel != expected {
        return Err(bad(line));
    }
    let polarization = match pol {
        "+" => Polarization::Plus,
        "-" => Polarization::Minus,
        _ => return Err(bad(line)),
    };
    Ok(PhotonRecord::new(slot, polarization))
}

/// Inverse of [`to_text`]. Blank lines and `#` comments are skipped.
pub fn parse_text(text: &str) -> Result<CollectiveKet, StateError> {
    let mut terms = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let sections: Vec<&str> = trimmed.split('|').collect();
        let [counts, photons, amp] = sections[..] else {
            return Err(bad(line));
        };

        let mut label = BasisLabel::default();
        let mut seen = 0;
        for field in counts.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(line))?;
            let value: u32 = value.parse().map_err(|_| bad(line))?;
            match key {
                "s-" => label.n_s_minus = value,
                "s+" => label.n_s_plus = value,
                "g+" => label.n_g_plus = value,
                "g-" => label.n_g_minus_ret = value,
                _ => return Err(bad(line)),
            }
            seen += 1;
        }
        if seen != 4 {
            return Err(bad(line));
        }
        for token in photons.split_whitespace() {
            label.photons.push(parse_record(token, line)?);
        }
        let parts: Vec<f64> = amp
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|_| bad(line)))
            .collect::<Result<_, _>>()?;
        let [re, im] = parts[..] else {
            return Err(bad(line));
        };
        terms.push((label, Complex64::new(re, im)));
    }
    Ok(CollectiveKet::from_terms(terms))
}
