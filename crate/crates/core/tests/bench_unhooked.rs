use deepactif::bench::{peak_allocation, time_method, tracking_available};
use deepactif::Error;

#[test]
fn without_the_hook_measurement_is_refused() {
    assert!(!tracking_available());
    assert!(matches!(peak_allocation(|| vec![0u8; 16]), Err(Error::Unsupported(_))));
    // Timing still works; memory is reported as absent rather than zero.
    let (r, _) = time_method("x", 1, 0, || Ok(())).unwrap();
    assert_eq!(r.peak_bytes, None);
}
