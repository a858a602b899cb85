//! Brute-force checks computed straight from the raw fixture rows, with no
//! parsing, rewriting, or engine involved. A measure value is obtained by
//! filtering the raw table with the context predicate and applying the
//! measure formula directly.

pub struct Order {
    pub prod: &'static str,
    pub cust: &'static str,
    pub year: i32,
    pub revenue: f64,
    pub cost: f64,
}

pub const ORDERS: [Order; 5] = [
    Order { prod: "Happy", cust: "Alice", year: 2023, revenue: 6.0, cost: 4.0 },
    Order { prod: "Acme", cust: "Bob", year: 2023, revenue: 5.0, cost: 2.0 },
    Order { prod: "Happy", cust: "Alice", year: 2024, revenue: 7.0, cost: 4.0 },
    Order { prod: "Whizz", cust: "Celia", year: 2023, revenue: 3.0, cost: 1.0 },
    Order { prod: "Happy", cust: "Bob", year: 2022, revenue: 4.0, cost: 1.0 },
];

pub const CUSTOMERS: [(&str, f64); 3] = [("Alice", 23.0), ("Bob", 41.0), ("Celia", 17.0)];

pub fn sum_revenue(pred: impl Fn(&Order) -> bool) -> f64 {
    ORDERS.iter().filter(|o| pred(o)).map(|o| o.revenue).sum()
}

pub fn profit_margin(pred: impl Fn(&Order) -> bool) -> f64 {
    let rows: Vec<&Order> = ORDERS.iter().filter(|o| pred(o)).collect();
    let revenue: f64 = rows.iter().map(|o| o.revenue).sum();
    let cost: f64 = rows.iter().map(|o| o.cost).sum();
    (revenue - cost) / revenue
}

pub fn avg_age(pred: impl Fn(&str) -> bool) -> f64 {
    let ages: Vec<f64> = CUSTOMERS
        .iter()
        .filter(|(name, _)| pred(name))
        .map(|(_, age)| *age)
        .collect();
    ages.iter().sum::<f64>() / ages.len() as f64
}
