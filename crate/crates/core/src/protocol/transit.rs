//! Phase types for a session.
//!
//! `Transmission → Delivered → Announced`. Only a [`Transmission`] hands out
//! mutable access to the particles in flight, and it is consumed by
//! [`Transmission::deliver`], which logs delivery and acknowledgment. Public
//! settings can only be attached to a [`Delivered`] value, so no code path
//! lets an attack run after (or see) an announcement.

use super::transcript::SessionEvent;

pub struct Transmission<P> {
    in_flight: P,
    events: Vec<SessionEvent>,
}

impl<P> Transmission<P> {
    pub fn send(in_flight: P, count: usize) -> Self {
        Transmission {
            in_flight,
            events: vec![SessionEvent::Sent { count }],
        }
    }

    /// The eavesdropper's hook: the particles while they are in flight.
    pub fn intercept(&mut self, attack_name: &'static str) -> &mut P {
        self.events.push(SessionEvent::AttackWindow { attack: attack_name });
        &mut self.in_flight
    }

    pub fn deliver(mut self) -> Delivered<P> {
        self.events.push(SessionEvent::Delivered);
        self.events.push(SessionEvent::Acknowledged);
        Delivered {
            received: self.in_flight,
            events: self.events,
        }
    }
}

/// Particles in the legitimate parties' hands; nothing announced yet.
pub struct Delivered<P> {
    received: P,
    events: Vec<SessionEvent>,
}

impl<P> Delivered<P> {
    pub fn received_mut(&mut self) -> &mut P {
        &mut self.received
    }

    pub fn announce<S>(mut self, settings: S) -> Announced<P, S> {
        self.events.push(SessionEvent::SettingsAnnounced);
        Announced {
            received: self.received,
            settings,
            events: self.events,
        }
    }
}

pub struct Announced<P, S> {
    pub received: P,
    pub settings: S,
    pub events: Vec<SessionEvent>,
}
