/// Pod that should take the next request: fewest in-flight, then lowest id.
pub fn route<I>(candidates: I) -> Option<u64>
where
    I: IntoIterator<Item = (u64, u32)>,
{
    candidates
        .into_iter()
        .min_by_key(|&(id, in_flight)| (in_flight, id))
        .map(|(id, _)| id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Accepted,
    QueueFull,
}

pub fn admit(in_flight: u32, max_queue: u32) -> Admission {
    if in_flight < max_queue {
        Admission::Accepted
    } else {
        Admission::QueueFull
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_in_flight_wins() {
        assert_eq!(route([(10, 3), (11, 1), (12, 2)]), Some(11));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        assert_eq!(route([(7, 2), (4, 2), (9, 2)]), Some(4));
    }

    #[test]
    fn no_candidates() {
        assert_eq!(route(std::iter::empty()), None);
    }

    #[test]
    fn admission_boundary() {
        assert_eq!(admit(99, 100), Admission::Accepted);
        assert_eq!(admit(100, 100), Admission::QueueFull);
    }
}
