use std::ops::Sub;

use super::MatchingError;

/// ψ: camera frame index → index of the nearest pose sample in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePoseIndex<T> {
    camera_times: Vec<T>,
    pose_times: Vec<T>,
    map: Vec<usize>,
}

/// Builds ψ by nearest neighbor in time; a tie goes to the earlier pose.
pub fn build_psi<T>(camera_times: &[T], pose_times: &[T]) -> Result<FramePoseIndex<T>, MatchingError>
where
    T: Copy + PartialOrd + Sub<Output = T>,
{
    if camera_times.is_empty() || pose_times.is_empty() {
        return Err(MatchingError::EmptyStream);
    }
    check_sorted(camera_times, "camera")?;
    check_sorted(pose_times, "pose")?;
    let map = camera_times
        .iter()
        .map(|&t| {
            let i = pose_times.partition_point(|&p| p < t);
            if i < pose_times.len() && (i == 0 || pose_times[i] - t < t - pose_times[i - 1]) {
                i
            } else {
                // earliest of equal timestamps
                let before = pose_times[i - 1];
                pose_times.partition_point(|&p| p < before)
            }
        })
        .collect();
    Ok(FramePoseIndex {
        camera_times: camera_times.to_vec(),
        pose_times: pose_times.to_vec(),
        map,
    })
}

fn check_sorted<T: PartialOrd>(times: &[T], which: &'static str) -> Result<(), MatchingError> {
    match times.windows(2).position(|w| !(w[0] <= w[1])) {
        Some(i) => Err(MatchingError::Unsorted {
            stream: which,
            index: i + 1,
        }),
        None => Ok(()),
    }
}

impl<T> FramePoseIndex<T> {
    /// Mapping of a run without camera frames.
    pub fn empty() -> Self {
        Self {
            camera_times: Vec::new(),
            pose_times: Vec::new(),
            map: Vec::new(),
        }
    }

    /// Pose index of camera frame `frame`.
    pub fn get(&self, frame: usize) -> usize {
        self.map[frame]
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn camera_times(&self) -> &[T] {
        &self.camera_times
    }

    pub fn pose_times(&self) -> &[T] {
        &self.pose_times
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn lidar(n: i64) -> Vec<Ratio<i64>> {
        (0..n).map(|k| Ratio::new(k, 20)).collect()
    }

    #[test]
    fn exact_hit_and_tie() {
        let poses = lidar(10);
        assert_eq!(build_psi(&[Ratio::new(1, 10)], &poses).unwrap().get(0), 2);
        assert_eq!(build_psi(&[Ratio::new(3, 40)], &poses).unwrap().get(0), 1);
    }

    #[test]
    fn rejects_unsorted_and_empty() {
        let poses = lidar(4);
        assert!(matches!(
            build_psi(&[Ratio::new(1, 10), Ratio::new(0, 1)], &poses),
            Err(MatchingError::Unsorted { stream: "camera", index: 1 })
        ));
        let bad = vec![Ratio::new(1, 1), Ratio::new(0, 1)];
        assert!(matches!(
            build_psi(&[Ratio::new(0, 1)], &bad),
            Err(MatchingError::Unsorted { stream: "pose", .. })
        ));
        assert!(matches!(build_psi::<f64>(&[], &[0.0]), Err(MatchingError::EmptyStream)));
    }

    #[test]
    fn night_rate_never_ties_lidar() {
        let poses = lidar(201);
        let cams: Vec<_> = (0..60).map(|k| Ratio::new(k, 6)).collect();
        let psi = build_psi(&cams, &poses).unwrap();
        for (k, &t) in cams.iter().enumerate() {
            let chosen = poses[psi.get(k)];
            let d = if chosen > t { chosen - t } else { t - chosen };
            assert!(d <= Ratio::new(1, 40));
        }
        let again = build_psi(&cams, &poses).unwrap();
        assert_eq!(psi, again);
    }

    fn sorted(v: Vec<i32>) -> Vec<i32> {
        let mut v = v;
        v.sort();
        v
    }

    proptest! {
        #[test]
        fn matches_exhaustive_scan(
            cams in prop::collection::vec(-500i32..500, 1..40).prop_map(sorted),
            poses in prop::collection::vec(-500i32..500, 1..60).prop_map(sorted),
        ) {
            let psi = build_psi(&cams, &poses).unwrap();
            for (k, &t) in cams.iter().enumerate() {
                let mut best = 0;
                for (j, &p) in poses.iter().enumerate() {
                    if (p - t).abs() < (poses[best] - t).abs() {
                        best = j;
                    }
                }
                prop_assert_eq!(psi.get(k), best);
            }
        }
    }
}
