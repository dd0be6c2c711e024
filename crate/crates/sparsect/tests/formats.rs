use std::fs;

use proptest::prelude::*;
use sparsect::core::{Image, Sinogram};
use sparsect::formats::*;
use sparsect::Error;
use tempfile::tempdir;

#[test]
fn two_by_two_image_is_row_major() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("img.txt");
    let img = Image::from_values(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    write_image_ascii(&img, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let tokens: Vec<f64> = text.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(tokens, [0.0, 1.0, 2.0, 3.0]);
    assert_eq!(read_image_ascii(&path, 2, 2).unwrap(), img);

    fs::write(&path, "0 1 2 3").unwrap();
    let back = read_image_ascii(&path, 2, 2).unwrap();
    assert_eq!(back.get(0, 1), 1.0);
    assert_eq!(back.get(1, 0), 2.0);
}

#[test]
fn negative_values_load_as_zero() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("img.txt");
    fs::write(&path, "1.5\n-0.5\n0\n2").unwrap();
    let img = read_image_ascii(&path, 2, 2).unwrap();
    assert_eq!(img.values(), &[1.5, 0.0, 0.0, 2.0]);
}

#[test]
fn short_files_are_count_errors() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("img.txt");
    fs::write(&path, "1 2 3").unwrap();
    assert!(matches!(
        read_image_ascii(&path, 2, 2),
        Err(Error::Count { expected: 4, found: 3, .. })
    ));
    assert!(matches!(
        read_sinogram_ascii(&path, 2, 2),
        Err(Error::Count { expected: 4, found: 3, .. })
    ));
}

#[test]
fn unparseable_token_is_located() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("img.txt");
    fs::write(&path, "1 2\n3 x4\n").unwrap();
    match read_image_ascii(&path, 2, 2) {
        Err(Error::Format { line: 2, token: Some(2), .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn two_by_two_sinogram_keeps_ray_order() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("sino.txt");
    let sino = Sinogram::from_values(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    write_sinogram_ascii(&sino, &path).unwrap();
    let back = read_sinogram_ascii(&path, 2, 2).unwrap();
    assert_eq!(back, sino);
    // detector-major: ray = det·views + view
    assert_eq!(back.get(1, 0), 2.0);
    assert_eq!(back.get(0, 1), 1.0);
}

#[test]
fn pgm_scaling() {
    let img = Image::from_values(2, 2, vec![0.0, 1.0, 2.0, 4.0]).unwrap();
    let bytes = encode_pgm(&img, true);
    assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
    assert_eq!(&bytes[bytes.len() - 4..], &[0, 63, 127, 255]);

    let zero = encode_pgm(&Image::zeros(3, 2), true);
    assert!(zero[zero.len() - 6..].iter().all(|&b| b == 0));

    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    write_image_pgm(&img, &a, true).unwrap();
    write_image_pgm(&img, &b, true).unwrap();
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn image_round_trip(
        (rows, cols, values) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), prop::collection::vec(0.0f64..1e3, r * c))
        })
    ) {
        let img = Image::from_values(rows, cols, values).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.txt");
        write_image_ascii(&img, &path).unwrap();
        let back = read_image_ascii(&path, rows, cols).unwrap();
        for (a, b) in img.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn sinogram_round_trip(values in prop::collection::vec(0.0f64..500.0, 12)) {
        let sino = Sinogram::from_values(3, 4, values).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("sino.txt");
        write_sinogram_ascii(&sino, &path).unwrap();
        let back = read_sinogram_ascii(&path, 3, 4).unwrap();
        for (a, b) in sino.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
