//! Parse business and reaction records, then clean them: duplicates,
//! inconsistent rows and blocklisted non-business pages are dropped.

use corelate::ingest::{self, Format};

const BUSINESSES: &str = "\
id,name,lat,lon,category,checkins,fans,rating
p1,Bakery Sol,-25.43,-49.27,Businesses/Food & Beverage/Bakery,120,300,4.6
p2,Studio Nove,-25.44,-49.28,Businesses/Beauty & Personal Care/Hair Salon,,,
p1,Bakery Sol (again),-25.43,-49.27,Businesses/Food & Beverage/Bakery,,,
p3,,,,Businesses/Shopping & Retail,,,
p4,Praca Central,-25.42,-49.26,Community/Public Square,,,
,missing id,,,,,,
";

const REACTIONS: &str = "\
user_id,business_id,reaction_type
u1,p1,Like
u1,p2,wow
u2,p4,Like
u3,p1,Angry
u3,p9,Like
u4,p2,Giggle
";

fn main() -> corelate::Result<()> {
    let businesses = ingest::parse_businesses(BUSINESSES.as_bytes(), Format::Csv)?;
    let reactions = ingest::parse_reactions(REACTIONS.as_bytes(), Format::Csv)?;
    for d in businesses.rejected.iter().chain(&reactions.rejected) {
        println!("rejected {d}");
    }

    let blocklist = ingest::parse_blocklist("p4  # a public square, not a business\n");
    let (kept, reactions, report) = ingest::clean(businesses.records, &reactions.records, &blocklist);
    println!("{report:#?}");
    for b in &kept {
        println!("{:<4} {:<12} {}", b.id, b.name, b.raw_category);
    }
    println!("{} reactions remain", reactions.len());
    Ok(())
}
