use spikekit::bubble::make_context;
use spikekit::greens::{ball_kernel, DomainKernel, GreensError};
use spikekit::tabulated::{GridSpec, Interpolation, TabulatedKernel};

fn table() -> (spikekit::bubble::DimensionContext, spikekit::greens::BallKernel, Vec<u8>) {
    let ctx = make_context(5).unwrap();
    let ball = ball_kernel(&ctx, &[0.0; 5], 1.0).unwrap();
    let bytes = TabulatedKernel::encode(&ball, &GridSpec::cube(5, 3, 0.35)).unwrap();
    (ctx, ball, bytes)
}

#[test]
fn header_layout_is_as_documented() {
    let (_, _, bytes) = table();
    assert_eq!(&bytes[..7], b"SPKGRN1");
    assert_eq!(bytes[7], 0);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 0);
    for a in 0..5 {
        assert_eq!(u32::from_le_bytes(bytes[16 + 4 * a..20 + 4 * a].try_into().unwrap()), 3);
    }
    let params = 36;
    let radius = f64::from_le_bytes(bytes[params + 40..params + 48].try_into().unwrap());
    assert_eq!(radius, 1.0);
    let bounds = params + 48;
    assert_eq!(f64::from_le_bytes(bytes[bounds..bounds + 8].try_into().unwrap()), -0.35);
    assert_eq!(f64::from_le_bytes(bytes[bounds + 8..bounds + 16].try_into().unwrap()), 0.35);
    let m = 3usize.pow(5);
    assert_eq!(bytes.len(), bounds + 80 + 8 * m * m);
}

#[test]
fn round_trip_reproduces_nodes() {
    let (ctx, ball, bytes) = table();
    let t = TabulatedKernel::from_bytes(&ctx, &bytes, Interpolation::Multilinear).unwrap();
    let x = [0.35, 0.0, -0.35, 0.0, 0.35];
    let y = [0.0, -0.35, 0.0, 0.35, 0.0];
    assert_eq!(t.regular(&x, &y).unwrap(), ball.regular(&x, &y).unwrap());
    assert_eq!(t.robin(&[0.0; 5]).unwrap(), ball.robin(&[0.0; 5]).unwrap());
    let p = [0.1, -0.05, 0.2, 0.0, 0.07];
    let err = (t.regular(&p, &p).unwrap() - ball.regular(&p, &p).unwrap()).abs();
    assert!(err <= t.interpolation_error_estimate(), "{err:e} > {:e}", t.interpolation_error_estimate());
    assert!(t.max_asymmetry() <= 1e-12);
    assert!(matches!(t.regular(&[0.5, 0.0, 0.0, 0.0, 0.0], &p), Err(GreensError::OutsideTable(_))));
}

#[test]
fn nearest_order_is_readable() {
    let (ctx, _, bytes) = table();
    let t = TabulatedKernel::from_bytes(&ctx, &bytes, Interpolation::Nearest).unwrap();
    assert_eq!(t.order(), Interpolation::Nearest);
    assert!(t.interpolation_error_estimate() > 0.0);
}

#[test]
fn malformed_tables_are_refused() {
    let (ctx, _, bytes) = table();
    let read = |b: &[u8]| TabulatedKernel::from_bytes(&ctx, b, Interpolation::Multilinear);
    assert!(matches!(read(&[]), Err(GreensError::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(read(&bad), Err(GreensError::Format(_))));
    assert!(matches!(read(&bytes[..bytes.len() - 8]), Err(GreensError::Format(_))));
    let mut asym = bytes.clone();
    let at = bytes.len() - 16;
    asym[at..at + 8].copy_from_slice(&1e3f64.to_le_bytes());
    assert!(matches!(read(&asym), Err(GreensError::Asymmetric { .. })));
    let other = make_context(6).unwrap();
    assert!(TabulatedKernel::from_bytes(&other, &bytes, Interpolation::Multilinear).is_err());
}
