//! Standard MIDI File export: format 1, a melody track and a block-chord track.

use std::path::Path;

use num_traits::ToPrimitive;

use super::{Beats, LeadSheet, SheetError};

pub const TICKS_PER_QUARTER: u16 = 480;

const MELODY_CHANNEL: u8 = 0;
const CHORD_CHANNEL: u8 = 1;
const VELOCITY: u8 = 90;

struct TrackEvent {
    tick: u64,
    // note-offs sort before note-ons at the same tick
    order: u8,
    bytes: Vec<u8>,
}

fn write_vlq(out: &mut Vec<u8>, mut value: u64) {
    let mut buf = [0u8; 10];
    let mut i = buf.len() - 1;
    buf[i] = (value & 0x7f) as u8;
    value >>= 7;
    while value > 0 {
        i -= 1;
        buf[i] = 0x80 | (value & 0x7f) as u8;
        value >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

fn encode_track(meta: Vec<Vec<u8>>, mut events: Vec<TrackEvent>, end_tick: u64) -> Vec<u8> {
    events.sort_by_key(|e| (e.tick, e.order));
    let mut data = Vec::new();
    for m in meta {
        write_vlq(&mut data, 0);
        data.extend(m);
    }
    let mut now = 0;
    for e in events {
        write_vlq(&mut data, e.tick - now);
        now = e.tick;
        data.extend(e.bytes);
    }
    write_vlq(&mut data, end_tick.saturating_sub(now));
    data.extend([0xff, 0x2f, 0x00]);
    let mut chunk = b"MTrk".to_vec();
    chunk.extend((data.len() as u32).to_be_bytes());
    chunk.extend(data);
    chunk
}

fn text_meta(kind: u8, text: &str) -> Vec<u8> {
    let mut m = vec![0xff, kind];
    write_vlq(&mut m, text.len() as u64);
    m.extend(text.as_bytes());
    m
}

fn note_pair(events: &mut Vec<TrackEvent>, channel: u8, key: u8, on: u64, off: u64) {
    events.push(TrackEvent { tick: on, order: 1, bytes: vec![0x90 | channel, key, VELOCITY] });
    events.push(TrackEvent { tick: off, order: 0, bytes: vec![0x80 | channel, key, 0] });
}

/// Encodes a sheet as Standard MIDI File bytes.
///
/// One beat of the sheet's meter spans `480 * 4 / beat_unit` ticks, so a
/// quarter note is always 480 ticks. Tie chains become a single note.
pub fn write_midi(sheet: &LeadSheet) -> Vec<u8> {
    let ticks_per_beat = Beats::from_integer(TICKS_PER_QUARTER as i64 * 4 / sheet.meter.beat_unit as i64);
    let tick = |beats: Beats| -> u64 { (beats * ticks_per_beat).round().to_u64().unwrap_or(0) };
    let end_tick = tick(sheet.total_beats());

    let mut melody = Vec::new();
    for note in sheet.sounding_notes() {
        note_pair(&mut melody, MELODY_CHANNEL, note.pitch.midi(), tick(note.onset), tick(note.onset + note.duration));
    }

    let mut chords = Vec::new();
    let track = sheet.chord_track();
    for (i, (start, chord)) in track.iter().enumerate() {
        let stop = track.get(i + 1).map(|(p, _)| *p).unwrap_or_else(|| sheet.total_beats());
        let (on, off) = (tick(*start), tick(stop));
        if let Some(bass) = chord.bass {
            note_pair(&mut chords, CHORD_CHANNEL, 36 + bass.value(), on, off);
        }
        for interval in chord.quality.intervals() {
            note_pair(&mut chords, CHORD_CHANNEL, 48 + chord.root.value() + interval, on, off);
        }
    }

    let denominator_power = sheet.meter.beat_unit.trailing_zeros() as u8;
    let melody_meta = vec![
        text_meta(0x03, "Melody"),
        vec![0xff, 0x51, 0x03, 0x07, 0xa1, 0x20],
        vec![0xff, 0x58, 0x04, sheet.meter.beats_per_bar as u8, denominator_power, 24, 8],
    ];

    let mut out = b"MThd".to_vec();
    out.extend(6u32.to_be_bytes());
    out.extend(1u16.to_be_bytes());
    out.extend(2u16.to_be_bytes());
    out.extend(TICKS_PER_QUARTER.to_be_bytes());
    out.extend(encode_track(melody_meta, melody, end_tick));
    out.extend(encode_track(vec![text_meta(0x03, "Chords")], chords, end_tick));
    out
}

/// Writes [`write_midi`] output to `path`.
pub fn export_midi(sheet: &LeadSheet, path: impl AsRef<Path>) -> Result<(), SheetError> {
    std::fs::write(path, write_midi(sheet))?;
    Ok(())
}
