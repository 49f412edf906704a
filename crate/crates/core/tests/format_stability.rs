//! Golden-file checks: the serialized signal format and the codec payload
//! container must stay byte-stable.

use rdlab_core::codec::{
    read_payload, write_payload, BlockQuantizer, SignalCodec, SCHEME_BLOCK_QUANTIZER,
};
use rdlab_core::critical_measure::{sample_critical, MeasureSpec};
use rdlab_core::exponent::Exponent;
use rdlab_core::mc::shard_rng;
use rdlab_core::sequence_core::{
    l2_distance, signal_from_bytes, signal_to_bytes, PartitionSpec, SpaceSpec,
};

fn golden_space() -> SpaceSpec {
    SpaceSpec::new(
        PartitionSpec::dyadic(1, 4).unwrap(),
        Exponent::Finite(2.0),
        Exponent::Finite(2.0),
        1.5,
        0.0,
    )
    .unwrap()
}

#[test]
fn signal_format_is_byte_stable() {
    let space = golden_space();
    let measure = MeasureSpec::new(space).unwrap();
    let x = sample_critical(&measure, 4, &mut shard_rng(424242, 0)).unwrap();
    let bytes = signal_to_bytes(&x).unwrap();
    let golden = include_bytes!("fixtures/signal_golden.bin");
    assert_eq!(bytes, golden, "signal byte format drifted");
    let back = signal_from_bytes(golden).unwrap();
    assert_eq!(back, x);
}

#[test]
fn payload_format_is_byte_stable() {
    let space = golden_space();
    let measure = MeasureSpec::new(space.clone()).unwrap();
    let x = sample_critical(&measure, 4, &mut shard_rng(424242, 0)).unwrap();
    let codec = BlockQuantizer::new(&space, 96).unwrap();
    let payload = write_payload(SCHEME_BLOCK_QUANTIZER, &codec.encode(&x).unwrap());
    let golden = include_bytes!("fixtures/payload_golden.bin");
    assert_eq!(payload, golden, "payload byte format drifted");

    let (scheme, bits) = read_payload(golden).unwrap();
    assert_eq!(scheme, SCHEME_BLOCK_QUANTIZER);
    let decoded = codec.decode(&bits).unwrap();
    // Decoded signal agrees with a fresh round trip.
    let fresh = codec.decode(&codec.encode(&x).unwrap()).unwrap();
    assert_eq!(l2_distance(&decoded, &fresh).unwrap(), 0.0);
}
