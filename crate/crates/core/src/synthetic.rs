//! Seeded generators of labeled URLs for tests and smoke runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{UrlClass, UrlRecord};

const TLDS: [&str; 6] = ["com", "net", "org", "io", "info", "co"];

/// Substring that alone decides the class in [`separable`] corpora.
pub fn marker(class: UrlClass) -> &'static str {
    match class {
        UrlClass::Benign => "/about/team",
        UrlClass::Phishing => "/login-verify",
        UrlClass::Defacement => "/hacked-by",
        UrlClass::Malware => "/payload.exe",
    }
}

fn word(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len)
        .map(|_| char::from(b'a' + rng.random_range(0..26u8)))
        .collect()
}

/// `n` URLs, classes assigned round-robin, each carrying its class marker
/// after a random host. Output order is shuffled.
pub fn separable(n: usize, seed: u64) -> Vec<UrlRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<UrlRecord> = (0..n)
        .map(|i| {
            let class = UrlClass::ALL[i % UrlClass::COUNT];
            let scheme = if rng.random_bool(0.5) {
                "http"
            } else {
                "https"
            };
            let host = word(&mut rng, 4, 10);
            let tld = TLDS[rng.random_range(0..TLDS.len())];
            let tail: u32 = rng.random_range(0..1000);
            let url = format!("{scheme}://{host}.{tld}{}{tail}", marker(class));
            UrlRecord { url, label: class }
        })
        .collect();
    out.shuffle(&mut rng);
    out
}

/// Noisier corpus with overlapping surface features, roughly shaped like
/// real traffic: class priors skewed toward benign and class cues that are
/// statistical rather than exact.
pub fn realistic(n: usize, seed: u64) -> Vec<UrlRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = [0.66, 0.14, 0.15, 0.05];
    (0..n)
        .map(|_| {
            let mut u: f64 = rng.random();
            let mut class = UrlClass::Malware;
            for (c, w) in UrlClass::ALL.iter().zip(weights) {
                if u < w {
                    class = *c;
                    break;
                }
                u -= w;
            }
            let host = word(&mut rng, 3, 12);
            let tld = TLDS[rng.random_range(0..TLDS.len())];
            let path = word(&mut rng, 2, 8);
            let url = match class {
                UrlClass::Benign => format!("{host}.{tld}/{path}"),
                UrlClass::Phishing => {
                    let bait =
                        ["paypal", "apple", "bank", "secure", "account"][rng.random_range(0..5)];
                    format!("{bait}-{host}.{tld}/{path}/signin.php")
                }
                UrlClass::Defacement => format!(
                    "http://{host}.{tld}/index.php?option=com_{path}&view=article&id={}",
                    rng.random_range(1..500)
                ),
                UrlClass::Malware => format!(
                    "http://{}.{}.{}.{}:{}/{path}.{}",
                    rng.random_range(1..255),
                    rng.random_range(0..255),
                    rng.random_range(0..255),
                    rng.random_range(1..255),
                    rng.random_range(1024..65535),
                    ["exe", "bin", "sh", "apk"][rng.random_range(0..4)]
                ),
            };
            UrlRecord { url, label: class }
        })
        .collect()
}
