//! Fixtures shared by the benchmarks.

use qcomp::{
    build_dictionary, choose_delta, draw_dither, sample_scene, synthesize, ChannelKind, ComplexSignal,
    InterpolatedDictionary, InterpolationScheme, MeasurementChannel, RadarConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A ready-to-solve measurement.
pub struct Fixture {
    pub radar: RadarConfig,
    pub dict: InterpolatedDictionary,
    pub z: ComplexSignal,
    pub channel: MeasurementChannel,
    pub k: usize,
}

pub fn fixture(m: usize, rho: f64, scheme: InterpolationScheme, kind: ChannelKind, k: usize, seed: u64) -> Fixture {
    let radar = RadarConfig::normalized(m).expect("valid radar");
    let dict = build_dictionary(&radar, (rho * m as f64).round() as usize, scheme).expect("valid grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = synthesize(&radar, &sample_scene(&radar, k, &mut rng).expect("k >= 1"));
    let delta = choose_delta(&y).expect("nonzero signal");
    let channel = match kind {
        ChannelKind::Full => MeasurementChannel::FullResolution,
        ChannelKind::OneBit => MeasurementChannel::one_bit(delta).expect("delta > 0"),
        ChannelKind::OneBitDither => MeasurementChannel::one_bit_dithered(draw_dither(delta, m, &mut rng)),
    };
    let z = channel.apply(&y).expect("lengths match");
    Fixture {
        radar,
        dict,
        z,
        channel,
        k,
    }
}
