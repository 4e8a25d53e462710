//! Drop negative reactions and users outside the activity band, where the
//! upper end keeps 99.9% of the reactions of users with at least 3.

use corelate::ingest::{Reaction, ReactionDataset, ReactionType};
use corelate::reaction_filter::{self, FilterConfig};

fn main() -> corelate::Result<()> {
    let mut reactions = Vec::new();
    // 20,000 ordinary users with 3 to 12 reactions each
    for u in 0..20_000 {
        for b in 0..3 + u % 10 {
            reactions.push(Reaction::new(format!("u{u}"), format!("b{}", (u + b) % 50), ReactionType::Like));
        }
    }
    // a handful of one-off and negative reactions
    for u in 20_000..20_050 {
        reactions.push(Reaction::new(format!("u{u}"), "b1", ReactionType::Like));
        reactions.push(Reaction::new(format!("u{u}"), "b2", ReactionType::Angry));
    }
    // one account reacting to everything: too few reactions to matter for
    // coverage, so the band closes below it
    for b in 0..50 {
        reactions.push(Reaction::new("bot", format!("b{b}"), ReactionType::Like));
    }
    let ds = ReactionDataset::from_reactions(reactions);

    let (filtered, report) = reaction_filter::filter_reactions(&ds, &FilterConfig::default())?;
    println!("activity band: [{}, {}]", report.band.lower, report.band.upper);
    println!(
        "{} reactions in, {} negative removed, {} of {} users removed, {} reactions out",
        report.reactions_in, report.negative_removed, report.users_removed, report.users_in, report.reactions_out
    );
    assert!(!filtered.user_index().contains_key("bot"));
    Ok(())
}
