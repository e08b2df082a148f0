//! Canonical text form. Printing and re-parsing yields an equal model.

use std::fmt::{self, Display, Formatter, Write};

use super::model::*;
use crate::geometry::Vec2;

struct Num(f64);

impl Display for Num {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        // `{}` on f64 is the shortest round-tripping decimal, never exponent form.
        write!(f, "{}", self.0)
    }
}

struct Quoted<'a>(&'a str);

impl Display for Quoted<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('"')?;
        for c in self.0.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                c => f.write_char(c)?,
            }
        }
        f.write_char('"')
    }
}

struct Pt(Vec2);

impl Display for Pt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", Num(self.0.x), Num(self.0.y))
    }
}

fn join<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

impl Display for Scenario {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "SCENARIO {} {{", Quoted(&self.name))?;
        if let Some(v) = &self.version {
            writeln!(f, "  version = {};", Quoted(v))?;
        }
        if let Some(d) = &self.date {
            writeln!(f, "  date = {};", Quoted(d))?;
        }
        if let Some((lat, lon)) = self.origin {
            writeln!(f, "  origin = {};", Pt(Vec2::new(lat, lon)))?;
        }
        if !self.ground.is_empty() {
            writeln!(f, "  GROUND {{")?;
            for g in &self.ground {
                match g {
                    GroundShape::Polygon { id, height, vertices } => {
                        writeln!(f, "    POLYGON {id} {{")?;
                        writeln!(f, "      height = {};", Num(*height))?;
                        writeln!(f, "      vertices = {};", join(vertices.iter().map(|v| Pt(*v))))?;
                        writeln!(f, "    }}")?;
                    }
                    GroundShape::Cylinder { id, center, radius, height } => {
                        writeln!(f, "    CYLINDER {id} {{")?;
                        writeln!(f, "      center = {};", Pt(*center))?;
                        writeln!(f, "      radius = {};", Num(*radius))?;
                        writeln!(f, "      height = {};", Num(*height))?;
                        writeln!(f, "    }}")?;
                    }
                }
            }
            writeln!(f, "  }}")?;
        }
        for layer in &self.layers {
            writeln!(f, "  LAYER {} {{", layer.id)?;
            writeln!(f, "    height = {};", Num(layer.height))?;
            for road in &layer.roads {
                writeln!(f, "    ROAD {} {{", road.id)?;
                writeln!(f, "      name = {};", Quoted(&road.name))?;
                for lane in &road.lanes {
                    write_lane(f, lane)?;
                }
                writeln!(f, "    }}")?;
            }
            writeln!(f, "  }}")?;
        }
        for zone in &self.zones {
            writeln!(f, "  ZONE {} {{", zone.id)?;
            writeln!(f, "    name = {};", Quoted(&zone.name))?;
            if !zone.perimeter.is_empty() {
                writeln!(f, "    perimeter = {};", join(&zone.perimeter))?;
            }
            for spot in &zone.spots {
                writeln!(f, "    SPOT {} = {}, {};", spot.id, Pt(spot.first), Pt(spot.second))?;
            }
            writeln!(f, "  }}")?;
        }
        writeln!(f, "}}")
    }
}

fn write_lane(f: &mut Formatter<'_>, lane: &Lane) -> fmt::Result {
    writeln!(f, "      LANE {} {{", lane.id)?;
    writeln!(f, "        width = {};", Num(lane.width))?;
    writeln!(f, "        leftMarking = {};", lane.left_marking.keyword())?;
    writeln!(f, "        rightMarking = {};", lane.right_marking.keyword())?;
    if let Some(limit) = lane.speed_limit {
        writeln!(f, "        speedLimit = {};", Num(limit))?;
    }
    for p in &lane.points {
        writeln!(f, "        POINT {} = {};", p.id, Pt(p.position))?;
    }
    for c in &lane.connectors {
        writeln!(f, "        CONNECT {} -> {};", c.from, c.to)?;
    }
    for TrafficControl::StopSign(at) in &lane.traffic_controls {
        writeln!(f, "        STOPSIGN {at};")?;
    }
    writeln!(f, "      }}")
}

impl Display for Situation {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "SITUATION {} {{", Quoted(&self.name))?;
        if let Some(v) = &self.version {
            writeln!(f, "  version = {};", Quoted(v))?;
        }
        writeln!(f, "  scenario = {};", Quoted(&self.scenario))?;
        for o in &self.objects {
            writeln!(f, "  OBJECT {} {{", o.id)?;
            writeln!(f, "    name = {};", Quoted(&o.name))?;
            let Shape::Rectangle { length, width, height } = o.shape;
            writeln!(
                f,
                "    RECTANGLE {{ length = {}; width = {}; height = {}; }}",
                Num(length),
                Num(width),
                Num(height)
            )?;
            match &o.behavior {
                Behavior::PointIdDriver { route, speed } => {
                    writeln!(f, "    POINTIDDRIVER {{")?;
                    writeln!(f, "      speed = {};", Num(*speed))?;
                    writeln!(f, "      route = {};", join(route))?;
                    writeln!(f, "    }}")?;
                }
                Behavior::ExternalDriver { start } => {
                    writeln!(f, "    EXTERNALDRIVER {{ start = {start}; }}")?;
                }
            }
            match o.start {
                StartCondition::Immediately => writeln!(f, "    START IMMEDIATELY;")?,
                StartCondition::OnMoving(id) => writeln!(f, "    START ONMOVING {id};")?,
                StartCondition::OnEnteringPolygon { object, polygon } => {
                    writeln!(f, "    START ONENTERINGPOLYGON {object} {polygon};")?
                }
            }
            match o.stop {
                StopCondition::EndOfRoute => writeln!(f, "    STOP ENDOFROUTE;")?,
                StopCondition::OnReachingPoint(w) => writeln!(f, "    STOP ONREACHINGPOINT {w};")?,
            }
            writeln!(f, "  }}")?;
        }
        writeln!(f, "}}")
    }
}

impl Display for Document {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Document::Scenario(s) => s.fmt(f),
            Document::Situation(s) => s.fmt(f),
        }
    }
}
