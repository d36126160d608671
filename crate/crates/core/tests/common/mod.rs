//! Oracles and drivers shared by the integration tests. Nothing here calls
//! into the code under test to decide what is correct.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mvc_triads::demos::{DemoDescriptor, DemoName, DemoOptions};
use mvc_triads::{CommandName, Gesture, PropertyValue, Session, TriadId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Straight-line reading of the mask grammar. Returns (accepted, writes,
/// buffer, cursor).
pub fn reference_mask_step(
    mask: &str,
    buffer: &str,
    key: char,
) -> (bool, Vec<(usize, char)>, String, usize) {
    let m: Vec<char> = mask.chars().collect();
    let b: Vec<char> = buffer.chars().collect();
    let fits = |slot: char, c: char| match slot {
        '#' => c.is_ascii_digit(),
        'A' => c.is_ascii_alphabetic(),
        '*' => !c.is_control(),
        lit => lit == c,
    };
    let reject = (false, vec![], buffer.to_string(), b.len());
    if b.len() > m.len() {
        return reject;
    }
    for i in 0..b.len() {
        if !fits(m[i], b[i]) {
            return reject;
        }
    }
    let is_slot = |c: char| c == '#' || c == 'A' || c == '*';
    let mut out = Vec::new();
    let mut i = b.len();
    while i < m.len() && !is_slot(m[i]) {
        out.push((i, m[i]));
        i += 1;
    }
    if i == m.len() || !fits(m[i], key) {
        return reject;
    }
    out.push((i, key));
    i += 1;
    let more_slots = m[i..].iter().any(|&c| is_slot(c));
    if !more_slots {
        while i < m.len() {
            out.push((i, m[i]));
            i += 1;
        }
    }
    let mut text: String = buffer.to_string();
    for (_, c) in &out {
        text.push(*c);
    }
    (true, out, text, i)
}

/// Every string over `alphabet` of length 0..=max.
pub fn all_strings(alphabet: &[char], max: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &layer {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Hand-written rules of the employee form:
/// name and age required, age 0..=150, start 1..=9999, start <= end, zip #####.
pub fn form_oracle_clean(values: &[(&str, &PropertyValue)]) -> bool {
    let get = |name: &str| {
        values
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| (*v).clone())
            .unwrap_or(PropertyValue::Absent)
    };
    let (name, age, start, end, zip) = (get("name"), get("age"), get("start"), get("end"), get("zip"));
    if matches!(name, PropertyValue::Absent) || matches!(age, PropertyValue::Absent) {
        return false;
    }
    let within = |v: &PropertyValue, lo: i64, hi: i64| match v {
        PropertyValue::Absent => true,
        PropertyValue::Integer(i) => lo <= *i && *i <= hi,
        PropertyValue::Decimal(d) => {
            let (m, s) = (i128::from(d.mantissa()), 10i128.pow(u32::from(d.scale())));
            i128::from(lo) * s <= m && m <= i128::from(hi) * s
        }
        _ => false,
    };
    if !within(&age, 0, 150) || !within(&start, 1, 9999) {
        return false;
    }
    let as_ratio = |v: &PropertyValue| match v {
        PropertyValue::Integer(i) => Some((i128::from(*i), 1i128)),
        PropertyValue::Decimal(d) => Some((i128::from(d.mantissa()), 10i128.pow(u32::from(d.scale())))),
        _ => None,
    };
    let ordered = match (&start, &end) {
        (PropertyValue::Absent, _) | (_, PropertyValue::Absent) => true,
        (PropertyValue::Text(a), PropertyValue::Text(b)) => a <= b,
        (PropertyValue::Flag(a), PropertyValue::Flag(b)) => a <= b,
        (a, b) => match (as_ratio(a), as_ratio(b)) {
            (Some((an, ad)), Some((bn, bd))) => an * bd <= bn * ad,
            _ => false,
        },
    };
    if !ordered {
        return false;
    }
    match &zip {
        PropertyValue::Absent => true,
        PropertyValue::Text(t) => t.chars().count() == 5 && t.chars().all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

/// A gesture drawn from everything a user of `demo` could plausibly do.
pub fn random_gesture(rng: &mut ChaCha8Rng, demo: DemoName) -> Gesture {
    let commands = CommandName::ALL;
    let roll = rng.gen_range(0..100);
    if roll < 25 {
        return Gesture::Command(*commands.choose(rng).unwrap());
    }
    match demo {
        DemoName::Masked => {
            let keys = ['0', '5', '9', 'a', 'Z', '-', '(', ' ', '#'];
            if roll < 90 {
                Gesture::Key(*keys.choose(rng).unwrap())
            } else {
                Gesture::edit("phone", "555")
            }
        }
        DemoName::Form => {
            let props = ["name", "age", "start", "end", "zip", "nope"];
            let raws = ["", "Ada", "36", "-5", "200", "7", "12", "02139", "1234x", "9999", "x"];
            if roll < 90 {
                Gesture::edit(*props.choose(rng).unwrap(), *raws.choose(rng).unwrap())
            } else {
                Gesture::Focus("age".into())
            }
        }
        DemoName::Sheet => {
            let cells = ["A1", "B2", "C3", "A3"];
            let raws = ["=()", "=(1)", "=SUM(A1)", "x", "", "=((1)", "42"];
            if roll < 85 {
                Gesture::edit(*cells.choose(rng).unwrap(), *raws.choose(rng).unwrap())
            } else if roll < 90 {
                Gesture::Command(CommandName::NewWindow)
            } else {
                Gesture::Focus((*cells.choose(rng).unwrap()).into())
            }
        }
        DemoName::Pager => {
            let nav = [
                CommandName::NextPage,
                CommandName::PrevPage,
                CommandName::Retry,
                CommandName::Abort,
                CommandName::Ignore,
            ];
            if roll < 95 {
                Gesture::Command(*nav.choose(rng).unwrap())
            } else {
                Gesture::Key('x')
            }
        }
        DemoName::Refdata => {
            let props = ["name", "percent", "active", "title", "credit_limit", "vip"];
            let raws = ["", "Gold", "12.50", "150", "true", "-1", "abc"];
            if roll < 70 {
                Gesture::edit(*props.choose(rng).unwrap(), *raws.choose(rng).unwrap())
            } else {
                let flow = [
                    CommandName::Open,
                    CommandName::Save,
                    CommandName::Close,
                    CommandName::Retry,
                    CommandName::Yes,
                ];
                Gesture::Command(*flow.choose(rng).unwrap())
            }
        }
    }
}

/// Launches `demo` and feeds it `n` random gestures, with random ticks in
/// between. Refused gestures are part of the run.
pub fn fuzz_demo(demo: DemoName, seed: u64, n: usize) -> (Session, Vec<TriadId>) {
    let (mut session, ids) = DemoDescriptor::get(demo)
        .launch(DemoOptions::default())
        .expect("demo assembles");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let id = *ids.choose(&mut rng).unwrap();
        let views = session.views(id).len();
        let view = rng.gen_range(0..views);
        let g = random_gesture(&mut rng, demo);
        let _ = session.dispatch_from(id, view, g);
        if rng.gen_bool(0.3) {
            session.tick(rng.gen_range(1..5));
        }
    }
    session.run_until_idle();
    (session, ids)
}

/// Transcript lines of one triad with timing, ids, property names and values
/// erased: what is left is who said what kind of thing to whom.
pub fn erase_triad(transcript: &str, triad: &str, properties: &BTreeSet<&str>) -> Vec<String> {
    let tag = format!("{triad}.");
    transcript
        .lines()
        .filter(|l| l.contains(&tag))
        .map(|line| {
            let mut parts = line.splitn(5, ' ');
            let _tick = parts.next();
            let _seq = parts.next();
            let route = parts.next().unwrap_or_default().replace(&tag, "t.");
            let verb = parts.next().unwrap_or_default();
            let payload: Value = serde_json::from_str(parts.next().unwrap_or("null")).unwrap();
            format!("{route} {verb} {}", erase_value(&payload, properties))
        })
        .collect()
}

fn erase_value(v: &Value, properties: &BTreeSet<&str>) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(_) | Value::Number(_) | Value::String(_) => "_".into(),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(|i| erase_value(i, properties)).collect();
            format!("[{}]", inner.join(","))
        }
        Value::Object(map) => {
            let keyed_by_property = !map.is_empty() && map.keys().all(|k| properties.contains(k.as_str()));
            let mut inner: Vec<String> = map
                .iter()
                .map(|(k, v)| {
                    let k = if properties.contains(k.as_str()) { "_" } else { k.as_str() };
                    format!("{k}:{}", erase_value(v, properties))
                })
                .collect();
            if keyed_by_property {
                // property order is alphabetical, so it leaks the names
                inner.sort();
            }
            format!("{{{}}}", inner.join(","))
        }
    }
}

/// Rows shown by every ShowPage render, as ids.
pub fn page_ids(rows: &[mvc_triads::Snapshot]) -> Vec<i64> {
    rows.iter().filter_map(|r| r.id()).collect()
}
