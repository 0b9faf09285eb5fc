use edgeflow::convert::{field_to_image, image_to_field, FieldMode};
use edgeflow::image::{decode, encode, Format};
use edgeflow::noise::psnr;
use edgeflow::ImageBuffer;
use edgeflow_core::GridSpec;
use proptest::prelude::*;

fn image() -> impl Strategy<Value = ImageBuffer> {
    (3usize..12, 3usize..12, prop_oneof![Just(255u16), Just(4095u16), Just(65535u16)]).prop_flat_map(|(w, h, m)| {
        prop::collection::vec(0..=m, w * h).prop_map(move |px| ImageBuffer::new(w, h, m, px).unwrap())
    })
}

proptest! {
    #[test]
    fn every_format_round_trips(img in image()) {
        for format in [Format::PgmAscii, Format::PgmBinary, Format::Png] {
            match encode(&img, format) {
                Ok(bytes) => prop_assert_eq!(&decode(&bytes).unwrap(), &img),
                // PNG has no 12-bit grey
                Err(_) => prop_assert!(format == Format::Png && img.maxval() == 4095),
            }
        }
    }

    #[test]
    fn field_conversion_inverts(img in image(), lift in any::<bool>()) {
        let mode = if lift { FieldMode::Lift } else { FieldMode::Raw };
        let spec = GridSpec::pixel(img.width(), img.height()).unwrap();
        let (u, l) = image_to_field(&img, spec, mode).unwrap();
        let back = field_to_image(&u, &l).unwrap();
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(psnr(&img, &back).unwrap(), 99.0);
    }
}
