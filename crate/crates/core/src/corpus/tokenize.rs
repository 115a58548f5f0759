/// Split text into lowercase alphanumeric tokens.
///
/// `<...>` spans are removed and act as separators. A `<` with no closing
/// `>` is treated as ordinary punctuation. Tokens are maximal runs of
/// alphanumeric characters; everything else separates tokens and is dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut chars = text.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        if c == '<' {
            if let Some(close) = text[pos + 1..].find('>') {
                let end = pos + 1 + close;
                while matches!(chars.peek(), Some(&(p, _)) if p <= end) {
                    chars.next();
                }
                flush(&mut current, &mut tokens);
                continue;
            }
        }
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
        } else {
            flush(&mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}
