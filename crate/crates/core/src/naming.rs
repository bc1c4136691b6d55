//! Naming rules shared by usernames and group names.

/// Longest accepted username or group name.
pub const MAX_NAME_LEN: usize = 32;

/// Usernames and group names: 1 to 32 characters from `[a-z0-9_.-]`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= MAX_NAME_LEN
        && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || matches!(b, b'_' | b'.' | b'-'))
}

/// Stored file names: 1 to 255 bytes of UTF-8, no `/`, no NUL, not `.` or `..`.
pub fn is_valid_file_name(name: &str) -> bool {
    !name.is_empty() && name.len() <= 255 && name != "." && name != ".." && !name.contains(['/', '\0'])
}

/// 64 lowercase hex characters.
pub fn is_fingerprint(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert!(is_valid_name("alice"));
        assert!(is_valid_name("admin-ann"));
        assert!(is_valid_name("a.b_c-9"));
        assert!(!is_valid_name(""));
        assert!(!is_valid_name("Alice"));
        assert!(!is_valid_name("al ice"));
        assert!(!is_valid_name(&"a".repeat(33)));
        assert!(is_valid_name(&"a".repeat(32)));
    }

    #[test]
    fn file_names() {
        assert!(is_valid_file_name("report.pdf"));
        assert!(is_valid_file_name("ünïcode name"));
        assert!(!is_valid_file_name("../etc"));
        assert!(!is_valid_file_name(".."));
        assert!(!is_valid_file_name("."));
        assert!(!is_valid_file_name(""));
        assert!(!is_valid_file_name("a\0b"));
        assert!(!is_valid_file_name(&"x".repeat(256)));
    }

    #[test]
    fn fingerprints() {
        assert!(is_fingerprint(&"0".repeat(64)));
        assert!(!is_fingerprint(&"A".repeat(64)));
        assert!(!is_fingerprint(&"0".repeat(63)));
    }
}
