//! Recursive-descent parser for `.scn` and `.sit` documents. Every
//! production is selected by its leading keyword, so one token of lookahead
//! suffices.

use super::lexer::{tokenize, Tok, Token};
use super::model::*;
use super::SyntaxError;
use crate::geometry::Vec2;

pub fn parse(text: &str) -> Result<Document, Vec<SyntaxError>> {
    let tokens = tokenize(text).map_err(|e| vec![e])?;
    let mut p = Parser { toks: tokens, pos: 0 };
    p.document().map_err(|e| vec![e])
}

pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<SyntaxError>> {
    match parse(text)? {
        Document::Scenario(s) => Ok(s),
        Document::Situation(_) => Err(vec![SyntaxError {
            line: 1,
            column: 1,
            message: "expected a SCENARIO document, found SITUATION".into(),
        }]),
    }
}

pub fn parse_situation(text: &str) -> Result<Situation, Vec<SyntaxError>> {
    match parse(text)? {
        Document::Situation(s) => Ok(s),
        Document::Scenario(_) => Err(vec![SyntaxError {
            line: 1,
            column: 1,
            message: "expected a SITUATION document, found SCENARIO".into(),
        }]),
    }
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn at(t: &Token, message: impl Into<String>) -> SyntaxError {
    SyntaxError {
        line: t.line,
        column: t.column,
        message: message.into(),
    }
}

fn missing(close: &Token, attr: &str, block: &str) -> SyntaxError {
    at(close, format!("missing `{attr}` in {block}"))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, t: &Token, expected: &str) -> SyntaxError {
        at(t, format!("expected {expected}, found {}", t.tok.describe()))
    }

    fn expect(&mut self, want: Tok) -> PResult<Token> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.unexpected(&t, &want.describe()))
        }
    }

    fn keyword(&mut self, expected: &str) -> PResult<(String, Token)> {
        let t = self.bump();
        match &t.tok {
            Tok::Word(w) => Ok((w.clone(), t.clone())),
            _ => Err(self.unexpected(&t, expected)),
        }
    }

    fn int(&mut self) -> PResult<u32> {
        let t = self.bump();
        match &t.tok {
            Tok::Number(_, text) if text.bytes().all(|b| b.is_ascii_digit()) => {
                text.parse().map_err(|_| at(&t, format!("integer {text} out of range")))
            }
            _ => Err(self.unexpected(&t, "non-negative integer")),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let t = self.bump();
        match t.tok {
            Tok::Number(v, _) => Ok(v),
            _ => Err(self.unexpected(&t, "number")),
        }
    }

    fn string(&mut self) -> PResult<String> {
        let t = self.bump();
        match t.tok {
            Tok::Str(s) => Ok(s),
            _ => Err(self.unexpected(&t, "string")),
        }
    }

    fn waypoint(&mut self) -> PResult<WaypointId> {
        let t = self.bump();
        match t.tok {
            Tok::Waypoint(w) => Ok(w),
            _ => Err(self.unexpected(&t, "waypoint id (layer.road.lane.point)")),
        }
    }

    fn point(&mut self) -> PResult<Vec2> {
        self.expect(Tok::LParen)?;
        let x = self.number()?;
        self.expect(Tok::Comma)?;
        let y = self.number()?;
        self.expect(Tok::RParen)?;
        Ok(Vec2::new(x, y))
    }

    fn comma_list<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = vec![item(self)?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            out.push(item(self)?);
        }
        Ok(out)
    }

    /// `name = value ;` into an empty slot.
    fn attr<T>(&mut self, slot: &mut Option<T>, name: &Token, value: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<()> {
        if slot.is_some() {
            return Err(at(name, format!("duplicate attribute {}", name.tok.describe())));
        }
        self.expect(Tok::Eq)?;
        *slot = Some(value(self)?);
        self.expect(Tok::Semi)?;
        Ok(())
    }

    /// `{ item* }`; returns the closing brace.
    fn block(&mut self, label: &str, mut item: impl FnMut(&mut Self, String, Token) -> PResult<()>) -> PResult<Token> {
        let open = self.expect(Tok::LBrace)?;
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::RBrace => return Ok(self.bump()),
                Tok::Eof => {
                    return Err(at(
                        &t,
                        format!("unclosed {label} block opened at line {}, expected `}}`", open.line),
                    ))
                }
                Tok::Word(w) => {
                    let w = w.clone();
                    self.bump();
                    item(self, w, t)?;
                }
                _ => return Err(self.unexpected(&t, &format!("keyword, attribute or `}}` in {label}"))),
            }
        }
    }

    fn document(&mut self) -> PResult<Document> {
        let (kw, t) = self.keyword("SCENARIO or SITUATION")?;
        let doc = match kw.as_str() {
            "SCENARIO" => Document::Scenario(self.scenario()?),
            "SITUATION" => Document::Situation(self.situation()?),
            _ => return Err(self.unexpected(&t, "SCENARIO or SITUATION")),
        };
        let end = self.bump();
        if end.tok != Tok::Eof {
            return Err(self.unexpected(&end, "end of input"));
        }
        Ok(doc)
    }

    fn scenario(&mut self) -> PResult<Scenario> {
        let mut s = Scenario::new(self.string()?);
        let (mut version, mut date, mut origin) = (None, None, None);
        self.block("SCENARIO", |p, w, t| match w.as_str() {
            "version" => p.attr(&mut version, &t, Self::string),
            "date" => p.attr(&mut date, &t, Self::string),
            "origin" => p.attr(&mut origin, &t, Self::point),
            "GROUND" => {
                p.block("GROUND", |p, w, t| {
                    let shape = p.ground_shape(&w, &t)?;
                    s.ground.push(shape);
                    Ok(())
                })?;
                Ok(())
            }
            "LAYER" => {
                let layer = p.layer()?;
                s.layers.push(layer);
                Ok(())
            }
            "ZONE" => {
                let zone = p.zone()?;
                s.zones.push(zone);
                Ok(())
            }
            _ => Err(p.unexpected(&t, "version, date, origin, GROUND, LAYER or ZONE")),
        })?;
        s.version = version;
        s.date = date;
        s.origin = origin.map(|o: Vec2| (o.x, o.y));
        Ok(s)
    }

    fn ground_shape(&mut self, kind: &str, t: &Token) -> PResult<GroundShape> {
        match kind {
            "POLYGON" => {
                let id = self.int()?;
                let (mut height, mut vertices) = (None, None);
                let close = self.block("POLYGON", |p, w, t| match w.as_str() {
                    "height" => p.attr(&mut height, &t, Self::number),
                    "vertices" => p.attr(&mut vertices, &t, |p| p.comma_list(Self::point)),
                    _ => Err(p.unexpected(&t, "height or vertices")),
                })?;
                Ok(GroundShape::Polygon {
                    id,
                    height: height.ok_or_else(|| missing(&close, "height", "POLYGON"))?,
                    vertices: vertices.ok_or_else(|| missing(&close, "vertices", "POLYGON"))?,
                })
            }
            "CYLINDER" => {
                let id = self.int()?;
                let (mut center, mut radius, mut height) = (None, None, None);
                let close = self.block("CYLINDER", |p, w, t| match w.as_str() {
                    "center" => p.attr(&mut center, &t, Self::point),
                    "radius" => p.attr(&mut radius, &t, Self::number),
                    "height" => p.attr(&mut height, &t, Self::number),
                    _ => Err(p.unexpected(&t, "center, radius or height")),
                })?;
                Ok(GroundShape::Cylinder {
                    id,
                    center: center.ok_or_else(|| missing(&close, "center", "CYLINDER"))?,
                    radius: radius.ok_or_else(|| missing(&close, "radius", "CYLINDER"))?,
                    height: height.ok_or_else(|| missing(&close, "height", "CYLINDER"))?,
                })
            }
            _ => Err(self.unexpected(t, "POLYGON or CYLINDER")),
        }
    }

    fn layer(&mut self) -> PResult<Layer> {
        let id = self.int()?;
        let mut height = None;
        let mut roads = Vec::new();
        self.block("LAYER", |p, w, t| match w.as_str() {
            "height" => p.attr(&mut height, &t, Self::number),
            "ROAD" => {
                roads.push(p.road()?);
                Ok(())
            }
            _ => Err(p.unexpected(&t, "height or ROAD")),
        })?;
        Ok(Layer {
            id,
            height: height.unwrap_or(0.0),
            roads,
        })
    }

    fn road(&mut self) -> PResult<Road> {
        let id = self.int()?;
        let mut name = None;
        let mut lanes = Vec::new();
        self.block("ROAD", |p, w, t| match w.as_str() {
            "name" => p.attr(&mut name, &t, Self::string),
            "LANE" => {
                lanes.push(p.lane()?);
                Ok(())
            }
            _ => Err(p.unexpected(&t, "name or LANE")),
        })?;
        Ok(Road {
            id,
            name: name.unwrap_or_default(),
            lanes,
        })
    }

    fn marking(&mut self) -> PResult<Marking> {
        let (w, t) = self.keyword("solid, broken or none")?;
        match w.as_str() {
            "solid" => Ok(Marking::Solid),
            "broken" => Ok(Marking::Broken),
            "none" => Ok(Marking::None),
            _ => Err(self.unexpected(&t, "solid, broken or none")),
        }
    }

    fn lane(&mut self) -> PResult<Lane> {
        let id = self.int()?;
        let (mut width, mut left, mut right, mut limit) = (None, None, None, None);
        let mut points = Vec::new();
        let mut connectors = Vec::new();
        let mut controls = Vec::new();
        let close = self.block("LANE", |p, w, t| match w.as_str() {
            "width" => p.attr(&mut width, &t, Self::number),
            "leftMarking" => p.attr(&mut left, &t, Self::marking),
            "rightMarking" => p.attr(&mut right, &t, Self::marking),
            "speedLimit" => p.attr(&mut limit, &t, Self::number),
            "POINT" => {
                let id = p.int()?;
                p.expect(Tok::Eq)?;
                let position = p.point()?;
                p.expect(Tok::Semi)?;
                points.push(LanePoint { id, position });
                Ok(())
            }
            "CONNECT" => {
                let from = p.waypoint()?;
                p.expect(Tok::Arrow)?;
                let to = p.waypoint()?;
                p.expect(Tok::Semi)?;
                connectors.push(Connector { from, to });
                Ok(())
            }
            "STOPSIGN" => {
                let at = p.waypoint()?;
                p.expect(Tok::Semi)?;
                controls.push(TrafficControl::StopSign(at));
                Ok(())
            }
            _ => Err(p.unexpected(
                &t,
                "width, leftMarking, rightMarking, speedLimit, POINT, CONNECT or STOPSIGN",
            )),
        })?;
        Ok(Lane {
            id,
            width: width.ok_or_else(|| missing(&close, "width", "LANE"))?,
            left_marking: left.unwrap_or(Marking::None),
            right_marking: right.unwrap_or(Marking::None),
            speed_limit: limit,
            points,
            connectors,
            traffic_controls: controls,
        })
    }

    fn zone(&mut self) -> PResult<Zone> {
        let id = self.int()?;
        let (mut name, mut perimeter) = (None, None);
        let mut spots = Vec::new();
        self.block("ZONE", |p, w, t| match w.as_str() {
            "name" => p.attr(&mut name, &t, Self::string),
            "perimeter" => p.attr(&mut perimeter, &t, |p| p.comma_list(Self::waypoint)),
            "SPOT" => {
                let id = p.int()?;
                p.expect(Tok::Eq)?;
                let first = p.point()?;
                p.expect(Tok::Comma)?;
                let second = p.point()?;
                p.expect(Tok::Semi)?;
                spots.push(Spot { id, first, second });
                Ok(())
            }
            _ => Err(p.unexpected(&t, "name, perimeter or SPOT")),
        })?;
        Ok(Zone {
            id,
            name: name.unwrap_or_default(),
            perimeter: perimeter.unwrap_or_default(),
            spots,
        })
    }

    fn situation(&mut self) -> PResult<Situation> {
        let name = self.string()?;
        let (mut version, mut scenario) = (None, None);
        let mut objects = Vec::new();
        let close = self.block("SITUATION", |p, w, t| match w.as_str() {
            "version" => p.attr(&mut version, &t, Self::string),
            "scenario" => p.attr(&mut scenario, &t, Self::string),
            "OBJECT" => {
                objects.push(p.object()?);
                Ok(())
            }
            _ => Err(p.unexpected(&t, "version, scenario or OBJECT")),
        })?;
        Ok(Situation {
            name,
            version,
            scenario: scenario.ok_or_else(|| missing(&close, "scenario", "SITUATION"))?,
            objects,
        })
    }

    fn object(&mut self) -> PResult<SituationObject> {
        let id = self.int()?;
        let mut name = None;
        let mut shape: Option<Shape> = None;
        let mut behavior: Option<Behavior> = None;
        let mut start: Option<StartCondition> = None;
        let mut stop: Option<StopCondition> = None;
        let close = self.block("OBJECT", |p, w, t| match w.as_str() {
            "name" => p.attr(&mut name, &t, Self::string),
            "RECTANGLE" => {
                if shape.is_some() {
                    return Err(at(&t, "duplicate shape"));
                }
                let (mut length, mut width, mut height) = (None, None, None);
                let close = p.block("RECTANGLE", |p, w, t| match w.as_str() {
                    "length" => p.attr(&mut length, &t, Self::number),
                    "width" => p.attr(&mut width, &t, Self::number),
                    "height" => p.attr(&mut height, &t, Self::number),
                    _ => Err(p.unexpected(&t, "length, width or height")),
                })?;
                shape = Some(Shape::Rectangle {
                    length: length.ok_or_else(|| missing(&close, "length", "RECTANGLE"))?,
                    width: width.ok_or_else(|| missing(&close, "width", "RECTANGLE"))?,
                    height: height.unwrap_or(DEFAULT_OBJECT_HEIGHT),
                });
                Ok(())
            }
            "POINTIDDRIVER" | "EXTERNALDRIVER" => {
                if behavior.is_some() {
                    return Err(at(&t, "duplicate behavior"));
                }
                if w == "POINTIDDRIVER" {
                    let (mut speed, mut route) = (None, None);
                    let close = p.block("POINTIDDRIVER", |p, w, t| match w.as_str() {
                        "speed" => p.attr(&mut speed, &t, Self::number),
                        "route" => p.attr(&mut route, &t, |p| p.comma_list(Self::waypoint)),
                        _ => Err(p.unexpected(&t, "speed or route")),
                    })?;
                    behavior = Some(Behavior::PointIdDriver {
                        speed: speed.ok_or_else(|| missing(&close, "speed", "POINTIDDRIVER"))?,
                        route: route.ok_or_else(|| missing(&close, "route", "POINTIDDRIVER"))?,
                    });
                } else {
                    let mut start_at = None;
                    let close = p.block("EXTERNALDRIVER", |p, w, t| match w.as_str() {
                        "start" => p.attr(&mut start_at, &t, Self::waypoint),
                        _ => Err(p.unexpected(&t, "start")),
                    })?;
                    behavior = Some(Behavior::ExternalDriver {
                        start: start_at.ok_or_else(|| missing(&close, "start", "EXTERNALDRIVER"))?,
                    });
                }
                Ok(())
            }
            "START" => {
                if start.is_some() {
                    return Err(at(&t, "duplicate START"));
                }
                let (kw, kt) = p.keyword("IMMEDIATELY, ONMOVING or ONENTERINGPOLYGON")?;
                start = Some(match kw.as_str() {
                    "IMMEDIATELY" => StartCondition::Immediately,
                    "ONMOVING" => StartCondition::OnMoving(p.int()?),
                    "ONENTERINGPOLYGON" => {
                        let object = p.int()?;
                        let polygon = p.int()?;
                        StartCondition::OnEnteringPolygon { object, polygon }
                    }
                    _ => return Err(p.unexpected(&kt, "IMMEDIATELY, ONMOVING or ONENTERINGPOLYGON")),
                });
                p.expect(Tok::Semi)?;
                Ok(())
            }
            "STOP" => {
                if stop.is_some() {
                    return Err(at(&t, "duplicate STOP"));
                }
                let (kw, kt) = p.keyword("ENDOFROUTE or ONREACHINGPOINT")?;
                stop = Some(match kw.as_str() {
                    "ENDOFROUTE" => StopCondition::EndOfRoute,
                    "ONREACHINGPOINT" => StopCondition::OnReachingPoint(p.waypoint()?),
                    _ => return Err(p.unexpected(&kt, "ENDOFROUTE or ONREACHINGPOINT")),
                });
                p.expect(Tok::Semi)?;
                Ok(())
            }
            _ => Err(p.unexpected(
                &t,
                "name, RECTANGLE, POINTIDDRIVER, EXTERNALDRIVER, START or STOP",
            )),
        })?;
        Ok(SituationObject {
            id,
            name: name.unwrap_or_default(),
            shape: shape.ok_or_else(|| missing(&close, "RECTANGLE", "OBJECT"))?,
            behavior: behavior.ok_or_else(|| missing(&close, "POINTIDDRIVER or EXTERNALDRIVER", "OBJECT"))?,
            start: start.unwrap_or(StartCondition::Immediately),
            stop: stop.unwrap_or(StopCondition::EndOfRoute),
        })
    }
}
