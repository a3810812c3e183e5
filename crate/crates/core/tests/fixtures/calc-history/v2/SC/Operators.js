// &begin[DIV]
function divide(a, b) {
  return a / b;
}
// &end[DIV]
