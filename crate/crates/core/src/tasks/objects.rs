/// The six object configurations: sphere, cube, and a prism and a
/// cylinder each lying or standing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectConfig {
    pub id: usize,
    pub name: &'static str,
    /// How far the object travels under the same push, 0..=1.
    pub rollability: f64,
    pub topple_prone: bool,
    /// Height of the centre of mass when resting on the table.
    pub rest_height: f64,
    /// Whether another object can be stacked on top of it.
    pub stable_base: bool,
}

pub const OBJECT_COUNT: usize = 6;

pub const OBJECTS: [ObjectConfig; OBJECT_COUNT] = [
    ObjectConfig {
        id: 0,
        name: "sphere",
        rollability: 1.0,
        topple_prone: false,
        rest_height: 0.3,
        stable_base: false,
    },
    ObjectConfig {
        id: 1,
        name: "cube",
        rollability: 0.2,
        topple_prone: false,
        rest_height: 0.3,
        stable_base: true,
    },
    ObjectConfig {
        id: 2,
        name: "h-prism",
        rollability: 0.3,
        topple_prone: false,
        rest_height: 0.3,
        stable_base: false,
    },
    ObjectConfig {
        id: 3,
        name: "v-prism",
        rollability: 0.25,
        topple_prone: true,
        rest_height: 0.6,
        stable_base: true,
    },
    ObjectConfig {
        id: 4,
        name: "h-cylinder",
        rollability: 0.8,
        topple_prone: false,
        rest_height: 0.3,
        stable_base: false,
    },
    ObjectConfig {
        id: 5,
        name: "v-cylinder",
        rollability: 0.3,
        topple_prone: true,
        rest_height: 0.9,
        stable_base: true,
    },
];

impl ObjectConfig {
    /// Objects that roll away rather than rest when placed.
    pub fn rolls(&self) -> bool {
        self.rollability >= 0.5
    }
}

/// A stack is stable when the base supports stacking and the picked
/// object does not roll off.
pub fn stable_pair(picked: usize, target: usize) -> bool {
    OBJECTS[target].stable_base && !OBJECTS[picked].rolls()
}
