/// Lowercased word and punctuation tokens. An apostrophe between two
/// alphanumeric characters stays inside its word ("don't").
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            word.extend(c.to_lowercase());
        } else if c == '\''
            && !word.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            word.push(c);
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                tokens.push(c.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Unigrams followed by space-joined bigrams.
pub fn ngrams(tokens: &[String]) -> Vec<String> {
    let mut out = tokens.to_vec();
    out.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Bucket index of every n-gram of `text`, duplicates kept.
pub fn hashed_ngrams(text: &str, buckets: usize) -> Vec<usize> {
    ngrams(&tokenize(text))
        .iter()
        .map(|g| (fnv1a(g.as_bytes()) % buckets as u64) as usize)
        .collect()
}

/// Hashed n-gram counts plus a constant bias feature at index `buckets`,
/// L2-normalized and sorted by index.
pub fn hashed_features(text: &str, buckets: usize) -> Vec<(usize, f64)> {
    let mut idx = hashed_ngrams(text, buckets);
    idx.push(buckets);
    idx.sort_unstable();
    let mut out: Vec<(usize, f64)> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some((j, v)) if *j == i => *v += 1.0,
            _ => out.push((i, 1.0)),
        }
    }
    normalize(&mut out);
    out
}

pub(crate) fn normalize(v: &mut [(usize, f64)]) {
    let n = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for (_, x) in v.iter_mut() {
            *x /= n;
        }
    }
}
